"""Hamiltonians built from motif excesses and their variational values.

A Hamiltonian is h(x) = sum_k beta_k * (x_k - c_k)_+^(gamma_k) over the
densities of a motif family.  The growth condition gamma_k < Delta / e(F_k)
(strict) keeps the planar objective h(T(a, b)) - a/2 - b bounded above; the
value psi is its supremum, computed both directly in the (a, b) plane and
through the dual sup_s { h(1 + s) - phi(s) }.

The single-motif model with f(x) = (x - shift)_+^(gamma / e(F)) gets a
dedicated solver that locates the hub/clique branch maximizers, the branch
crossover s_c, and the critical coupling beta_c where the clique branch takes
over.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import DegeneracyError, DomainError
from .motifs import indep_poly, resolve_motif, validate_family
from .planar import PlanarProgram

GOLD = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class HamiltonianTerm:
    k: int
    beta: float
    shift: float = 1.0
    gamma: float = 0.5


@dataclass
class HamiltonianSpec:
    family: tuple
    terms: tuple
    allow_degenerate: bool = False
    callback: object = None   # optional monotone callable on density vectors

    def __post_init__(self):
        self.family = tuple(resolve_motif(m) for m in self.family)
        self.terms = tuple(
            t if isinstance(t, HamiltonianTerm) else HamiltonianTerm(**t)
            for t in self.terms
        )


@dataclass
class ValidationReport:
    ok: bool
    delta: int
    errors: list = field(default_factory=list)  # (term index or None, message)
    warnings: list = field(default_factory=list)


def validate_hamiltonian(spec):
    errors = []
    warnings = []
    try:
        family = validate_family(spec.family, allow_mixed_max_degree=True)
    except DomainError as exc:
        return ValidationReport(False, 0, [(None, str(exc))], [])
    warnings.extend(family.warnings)
    delta = family.delta
    for idx, term in enumerate(spec.terms):
        if not 0 <= term.k < len(spec.family):
            errors.append((idx, "term references motif %d outside the family"
                           % term.k))
            continue
        if term.beta <= 0:
            errors.append((idx, "beta must be positive"))
        if term.gamma <= 0:
            errors.append((idx, "gamma must be positive"))
            continue
        # each motif's own max degree governs boundedness of its planar term;
        # for same-degree families this is the usual Delta / e(F_k) bound
        motif = spec.family[term.k]
        bound = motif.max_degree / motif.edge_count
        if term.gamma >= bound:
            msg = ("growth condition fails: gamma=%g not below %g for motif %s"
                   % (term.gamma, bound, motif.name))
            if spec.allow_degenerate:
                warnings.append(msg + " (allow_degenerate set)")
            else:
                errors.append((idx, msg))
    if spec.callback is not None and not errors:
        msg = _ray_scan(spec)
        if msg:
            if spec.allow_degenerate:
                warnings.append(msg + " (allow_degenerate set)")
            else:
                errors.append((None, msg))
    return ValidationReport(not errors, delta, errors, warnings)


def _ray_scan(spec):
    """Empirical growth check used when a callback term is present.

    Walks three rays in the (a, b) plane and requires the objective to be
    decreasing at large amplitudes; analytic growth bounds are unavailable
    for callbacks.
    """
    prog = PlanarProgram(spec.family, allow_mixed_max_degree=True)
    g = _direct_objective(spec, prog)
    for da, db in ((1.0, 0.0), (0.0, 1.0), (1.0, 1.0)):
        t = np.geomspace(64.0, 2.0 ** 30, 25)
        vals = np.array([g(np.float64(da * x), np.float64(db * x)) for x in t])
        if not np.all(np.diff(vals) < 0.0):
            return ("callback term fails the empirical growth check on ray "
                    "(%g, %g)" % (da, db))
    return None


def h_value(spec, x):
    """h(x) for a density vector x (vectorized over trailing shapes)."""
    x = np.asarray(x, dtype=float)
    out = 0.0
    for t in spec.terms:
        out = out + t.beta * np.maximum(x[t.k] - t.shift, 0.0) ** t.gamma
    if spec.callback is not None:
        out = out + spec.callback(x)
    return out


def h_at_one(spec):
    return float(h_value(spec, np.ones(len(spec.family))))


def hamiltonian_to_json_dict(spec):
    return {
        "family": [m.name for m in spec.family],
        "terms": [
            {"k": t.k, "beta": t.beta, "shift": t.shift, "gamma": t.gamma}
            for t in spec.terms
        ],
        "allow_degenerate": spec.allow_degenerate,
    }


def hamiltonian_from_json_dict(d):
    try:
        family = tuple(d["family"])
        terms = tuple(
            HamiltonianTerm(int(t["k"]), float(t["beta"]),
                            float(t.get("shift", 1.0)),
                            float(t["gamma"]))
            for t in d["terms"]
        )
        return HamiltonianSpec(family, terms,
                               bool(d.get("allow_degenerate", False)))
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError("bad hamiltonian json: %s" % exc)


def load_hamiltonian(path):
    with open(path) as fh:
        return hamiltonian_from_json_dict(json.load(fh))


# ---------------------------------------------------------------------------
# psi via direct planar maximization and via the dual over excess targets


@dataclass
class PsiSolution:
    psi: float
    psi_direct: float
    psi_dual: float
    duality_gap: float
    optimizers: list        # (a, b) pairs
    s_star: list            # excess vectors at the optimizers
    h_at_one: float
    excess_psi: float
    warnings: list = field(default_factory=list)


def _direct_objective(spec, prog):
    def g(a, b):
        return h_value(spec, prog.t_values(a, b)) - 0.5 * a - b
    return g


def _find_box(g):
    size = 4.0
    for _ in range(44):
        axis = np.linspace(0.0, size, 41)
        aa, bb = np.meshgrid(axis, axis, indexing="ij")
        with np.errstate(over="ignore"):
            vals = g(aa, bb)
        inner = vals.max()
        ring = max(vals[-1, :].max(), vals[:, -1].max())
        margin = max(1.0, 1e-9 * abs(inner))
        if np.isfinite(inner) and ring <= inner - margin:
            return size
        size *= 2.0
    raise DegeneracyError(
        "objective appears unbounded; the growth condition is violated")


def psi_solve(spec, seed=0, tie_tol=1e-8, dedup_tol=1e-8):
    report = validate_hamiltonian(spec)
    if not report.ok:
        raise DomainError("invalid hamiltonian: %s" % report.errors)
    prog = PlanarProgram(spec.family, allow_mixed_max_degree=True)
    g = _direct_objective(spec, prog)
    size = _find_box(g)

    axis = np.concatenate([[0.0], np.geomspace(1e-4, size, 60)])
    aa, bb = np.meshgrid(axis, axis, indexing="ij")
    vals = g(aa, bb)
    flat = np.argsort(vals.ravel())[::-1][:10]
    starts = [(aa.ravel()[i], bb.ravel()[i]) for i in flat]

    def neg(u):
        return -g(u[0] * u[0], u[1] * u[1])

    best = -np.inf
    direct_pts = []
    for a0, b0 in starts:
        res = minimize(neg, [math.sqrt(a0), math.sqrt(b0)],
                       method="Nelder-Mead",
                       options=dict(xatol=1e-10, fatol=1e-14,
                                    maxiter=4000, maxfev=4000))
        a, b = res.x[0] ** 2, res.x[1] ** 2
        val = -res.fun
        direct_pts.append((a, b, val))
        best = max(best, val)
    psi_direct = best

    # dual route: maximize h(1 + s) - phi(s) over the nonnegative orthant
    m = prog.m

    def dual_val(s):
        if not np.all(np.isfinite(s)) or s.max(initial=0.0) > 1e100:
            return -math.inf
        return float(h_value(spec, 1.0 + s) - prog.solve(s).value)

    def neg_dual(u):
        return -dual_val(u * u)

    rng = np.random.default_rng(seed)
    dual_starts = [np.maximum(prog.excess(a, b), 0.0)
                   for a, b, val in direct_pts[:2]]
    dual_starts.append(np.zeros(m))
    dual_starts.append(np.ones(m))
    for _ in range(2):
        dual_starts.append(rng.uniform(0.0, 4.0, size=m) ** 2)
    explored = []
    for s0 in dual_starts:
        res = minimize(neg_dual, np.sqrt(np.maximum(s0, 0.0)),
                       method="Nelder-Mead",
                       options=dict(xatol=1e-6, fatol=1e-10,
                                    maxiter=400, maxfev=400))
        explored.append((res.fun, res.x))
    explored.sort(key=lambda t: t[0])
    psi_dual = -np.inf
    dual_args = []
    for fun0, x0 in explored[:2]:
        res = minimize(neg_dual, x0, method="Nelder-Mead",
                       options=dict(xatol=1e-10, fatol=1e-14,
                                    maxiter=1500, maxfev=1500))
        val = -res.fun
        if val > psi_dual:
            psi_dual = val
        dual_args.append(res.x ** 2)

    psi = max(psi_direct, psi_dual)

    # assemble the optimizer set: direct winners plus the planar optimizers
    # at their excess vectors (the dual extraction)
    cands = [(a, b) for a, b, val in direct_pts]
    for a, b, val in direct_pts:
        if val < psi - max(1e-6, 10 * tie_tol) * (1.0 + abs(psi)):
            continue
        sol = prog.solve(prog.excess(a, b))
        cands.extend((o.a, o.b) for o in sol.optimizers)
    for s_arg in dual_args:
        sol = prog.solve(s_arg)
        cands.extend((o.a, o.b) for o in sol.optimizers)

    scored = sorted(
        ((a, b, g(np.float64(a), np.float64(b))) for a, b in cands),
        key=lambda t: -t[2])
    opts = []
    for a, b, val in scored:
        if val < psi - tie_tol * (1.0 + abs(psi)):
            continue
        if all(abs(a - oa) + abs(b - ob) > dedup_tol for oa, ob in opts):
            opts.append((float(a), float(b)))
    opts.sort()
    s_star = []
    for a, b in opts:
        sv = tuple(float(x) for x in prog.excess(a, b))
        if all(max(abs(x - y) for x, y in zip(sv, old)) > dedup_tol
               for old in s_star):
            s_star.append(sv)

    h1 = h_at_one(spec)
    warnings = list(report.warnings)
    if len(opts) > 16:
        warnings.append("optimizer count exceeds 16; the set may be a continuum")
    gap = abs(psi_direct - psi_dual)
    return PsiSolution(psi, psi_direct, psi_dual, gap, opts, s_star,
                       h1, psi - h1, warnings)


# ---------------------------------------------------------------------------
# single-motif models with f(x) = (x - shift)_+^(gamma / e(F))


@dataclass
class EdgeFModel:
    motif: object
    beta: float
    gamma: float
    shift: float = 1.0

    def __post_init__(self):
        self.motif = resolve_motif(self.motif)
        if self.motif.edge_count == 0 or not self.motif.is_connected():
            raise DomainError("edge-f model needs a connected motif with edges")
        if self.beta < 0:
            raise DomainError("beta must be nonnegative")
        if not 0 < self.gamma < self.motif.max_degree:
            raise DomainError(
                "gamma must lie strictly inside (0, %d)" % self.motif.max_degree)
        if self.shift < 0:
            raise DomainError("shift must be nonnegative")

    @property
    def exponent(self):
        return self.gamma / self.motif.edge_count


@dataclass
class EdgeFSolution:
    s_c: float          # branch crossover; None for irregular motifs
    beta_c: float       # critical coupling; None for irregular motifs
    beta_o: float
    phase: str          # "hub", "clique", or "tie"
    s_hub: float
    value_hub: float
    s_clique: float     # None for irregular motifs
    value_clique: float
    s_star: float
    a_star: float       # clique amplitude at the clique maximizer
    b_star: float       # hub amplitude at the hub maximizer
    psi: float
    ambiguous: bool
    warnings: list = field(default_factory=list)


def _golden(fun, lo, hi, iters=140):
    x1 = hi - GOLD * (hi - lo)
    x2 = lo + GOLD * (hi - lo)
    f1, f2 = fun(x1), fun(x2)
    for _ in range(iters):
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + GOLD * (hi - lo)
            f2 = fun(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - GOLD * (hi - lo)
            f1 = fun(x1)
        if hi - lo < 1e-15 * (1.0 + abs(lo) + abs(hi)):
            break
    x = 0.5 * (lo + hi)
    return x, fun(x)


def _max_1d(fun, lo, hi, dfun=None, grid_n=1601):
    """Grid scan plus golden-section refinement with plateau detection.

    Returns (argmax, max, ambiguous, spread); golden section runs from the
    best grid cell and from up to 7 other near-optimal cells, and the runs
    count as ambiguous when their arguments disagree by 1e-5 while the
    values agree to 1e-9.
    """
    if hi <= lo:
        return lo, float(fun(np.float64(lo))), False, 0.0
    grid = np.linspace(lo, hi, grid_n)
    vals = fun(grid)
    order = np.argsort(vals)[::-1]
    top = vals[order[0]]
    scale = 1.0 + abs(top)
    cells = [int(order[0])]
    for idx in order[1:]:
        if vals[idx] < top - 1e-9 * scale:
            break
        if all(abs(int(idx) - c) > 1 for c in cells):
            cells.append(int(idx))
        if len(cells) >= 8:
            break
    results = []
    for c in cells:
        g_lo = grid[max(c - 1, 0)]
        g_hi = grid[min(c + 1, grid_n - 1)]
        x, v = _golden(lambda t: float(fun(np.float64(t))), g_lo, g_hi)
        if dfun is not None and g_lo < x < g_hi:
            for _ in range(8):
                d1 = dfun(x)
                step = 1e-7 * (1.0 + abs(x))
                d2 = (dfun(x + step) - dfun(x - step)) / (2 * step)
                if not np.isfinite(d1) or not np.isfinite(d2) or d2 >= 0:
                    break
                x_new = x - d1 / d2
                if not g_lo <= x_new <= g_hi:
                    break
                x = x_new
            v2 = float(fun(np.float64(x)))
            if v2 >= v:
                v = v2
        results.append((x, v))
    results.sort(key=lambda t: -t[1])
    x_best, v_best = results[0]
    # endpoint maxima are exact; prefer them over golden-section dust
    for end in (lo, hi):
        v_end = float(fun(np.float64(end)))
        if v_end >= v_best:
            x_best, v_best = end, v_end
    close = [x for x, v in results if v >= v_best - 1e-9 * scale]
    spread = max(close) - min(close) if len(close) > 1 else 0.0
    ambiguous = spread >= 1e-5 * (1.0 + abs(x_best))
    return float(x_best), float(v_best), bool(ambiguous), float(spread)


def solve_s_c(motif):
    """Crossover where the clique cost half s^(2/v) meets the hub cost."""
    motif = resolve_motif(motif)
    if not motif.is_regular:
        raise DomainError("s_c needs a regular motif")
    p = indep_poly(motif)
    v = motif.vertices

    def q(s):
        return p(0.5 * s ** (2.0 / v)) - (1.0 + s)

    lo = 1e-6
    while q(lo) <= 0.0 and lo > 1e-14:
        lo /= 10.0
    hi = max(2.0 * lo, 1.0)
    while q(hi) > 0.0:
        hi *= 2.0
        if hi > 2.0 ** 60:
            raise DomainError("no crossover bracket found")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if q(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    s = 0.5 * (lo + hi)
    for _ in range(6):
        h = 1e-8 * (1.0 + s)
        dq = (q(s + h) - q(s - h)) / (2 * h)
        if dq == 0:
            break
        s = s - q(s) / dq
    return float(s)


class _Branches:
    """Closed-form hub/clique branch objectives for one edge-f model."""

    def __init__(self, model):
        self.model = model
        self.motif = model.motif
        self.v = self.motif.vertices
        self.e = self.motif.edge_count
        self.gq = model.exponent
        self.shift = model.shift
        self.regular = self.motif.is_regular
        self.p_star = indep_poly(self.motif.star_core())
        if self.regular:
            self.s_c = solve_s_c(self.motif)
            self.b_c = 0.5 * self.s_c ** (2.0 / self.v)
        else:
            self.s_c = None
            self.b_c = None

    def f(self, x):
        return np.maximum(np.asarray(x, dtype=float) - self.shift, 0.0) ** self.gq

    def f_prime(self, x):
        rest = np.maximum(np.asarray(x, dtype=float) - self.shift, 0.0)
        safe = np.where(rest > 0.0, rest, 1.0)
        return np.where(rest > 0.0, self.gq * safe ** (self.gq - 1.0), 0.0)

    # hub branch parameterized by b: s = P(b) - 1, cost b
    def hub_value(self, beta, b):
        return beta * self.f(self.p_star(b)) - b

    def hub_slope(self, beta, b):
        return beta * self.f_prime(self.p_star(b)) * self.p_star.deriv(b) - 1.0

    def hub_domain(self, beta):
        if self.regular:
            return 0.0, self.b_c
        hi = 8.0
        while True:
            grid = np.linspace(0.0, hi, 257)
            vals = self.hub_value(beta, grid)
            if vals[-1] <= vals.max() - 1.0 and np.argmax(vals) < 0.9 * len(grid):
                return 0.0, hi
            hi *= 2.0
            if hi > 2.0 ** 52:
                raise DegeneracyError("hub branch appears unbounded")

    # clique branch in s directly: value beta f(1+s) - s^(2/v)/2
    def clique_value(self, beta, s):
        return beta * self.f(1.0 + s) - 0.5 * np.asarray(s, float) ** (2.0 / self.v)

    def clique_slope(self, beta, s):
        return (beta * self.f_prime(1.0 + s)
                - (1.0 / self.v) * s ** (2.0 / self.v - 1.0))

    def clique_domain(self, beta):
        lo = self.s_c
        hi = max(2.0 * lo, 8.0)
        while True:
            grid = np.linspace(lo, hi, 257)
            vals = self.clique_value(beta, grid)
            if vals[-1] <= vals.max() - 1.0 and np.argmax(vals) < 0.9 * len(grid):
                return lo, hi
            hi *= 2.0
            if hi > 2.0 ** 52:
                raise DegeneracyError("clique branch appears unbounded")

    def hub_max(self, beta, grid_n=1601):
        lo, hi = self.hub_domain(beta)
        b, val, amb, spread = _max_1d(
            lambda t: self.hub_value(beta, t), lo, hi,
            dfun=lambda t: self.hub_slope(beta, t), grid_n=grid_n)
        s = float(self.p_star(b)) - 1.0
        return s, b, val, amb

    def clique_max(self, beta, grid_n=1601):
        lo, hi = self.clique_domain(beta)
        s, val, amb, spread = _max_1d(
            lambda t: self.clique_value(beta, t), lo, hi,
            dfun=lambda t: self.clique_slope(beta, t), grid_n=grid_n)
        return s, val, amb


_BETA_C_MEMO = {}


def solve_beta_c(model, cap=2.0 ** 20):
    """Smallest coupling where the clique branch value overtakes the hub."""
    br = model if isinstance(model, _Branches) else _Branches(model)
    if not br.regular:
        return None
    key = (br.motif.vertices, br.motif.edges, br.gq, br.shift)
    if key in _BETA_C_MEMO:
        return _BETA_C_MEMO[key]

    def gap(beta):
        _, _, hub, _ = br.hub_max(beta, grid_n=501)
        _, clique, _ = br.clique_max(beta, grid_n=501)
        return hub - clique

    lo, hi = 0.0, 1.0
    g_hi = gap(hi)
    while g_hi > 0.0:
        lo, hi = hi, 2.0 * hi
        if hi > cap:
            raise DomainError("beta_c bracket exceeded the doubling cap")
        g_hi = gap(hi)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    out = 0.5 * (lo + hi)
    _BETA_C_MEMO[key] = out
    return out


def solve_beta_o(model):
    """inf over s > 0 of phi(s) / (f(1+s) - f(1)); 0 when shift <= 1."""
    br = model if isinstance(model, _Branches) else _Branches(model)
    if br.shift <= 1.0:
        return 0.0

    def ratio(s):
        s = np.asarray(s, dtype=float)
        den = br.f(1.0 + s) - br.f(1.0)
        if br.regular:
            phi = np.minimum(0.5 * s ** (2.0 / br.v),
                             np.array([br.p_star.inverse(1.0 + x) for x in
                                       np.atleast_1d(s)]).reshape(s.shape))
        else:
            phi = np.array([br.p_star.inverse(1.0 + x)
                            for x in np.atleast_1d(s)]).reshape(s.shape)
        with np.errstate(divide="ignore"):
            return np.where(den > 0.0, phi / np.where(den > 0, den, 1.0), np.inf)

    lo = br.shift - 1.0
    grid = np.concatenate([lo + np.geomspace(1e-9, 1.0, 200),
                           np.geomspace(max(lo + 1.0, 1.0), 1e6, 200)])
    vals = ratio(grid)
    i = int(np.argmin(vals))
    g_lo = grid[max(i - 1, 0)]
    g_hi = grid[min(i + 1, len(grid) - 1)]
    x, neg_val = _golden(lambda t: -float(ratio(np.float64(t))), g_lo, g_hi)
    return float(min(vals[i], -neg_val))


def edge_f_solve(model):
    br = _Branches(model)
    beta = model.beta
    warnings = []
    s_hub, b_star, value_hub, amb_h = br.hub_max(beta)
    if br.regular:
        s_clique, value_clique, amb_c = br.clique_max(beta)
        a_star = s_clique ** (2.0 / br.v)
        beta_c = solve_beta_c(br)
        tie_scale = 1.0 + abs(value_hub) + abs(value_clique)
        if abs(value_hub - value_clique) <= 1e-12 * tie_scale:
            phase = "tie"
        elif value_hub > value_clique:
            phase = "hub"
        else:
            phase = "clique"
        psi = max(value_hub, value_clique)
        s_star = s_hub if phase == "hub" else s_clique
    else:
        s_clique = None
        value_clique = -math.inf
        a_star = None
        beta_c = None
        amb_c = False
        phase = "hub"
        psi = value_hub
        s_star = s_hub
    ambiguous = bool(amb_h or amb_c)
    if ambiguous:
        warnings.append("branch maximizer is flat beyond 1e-5; reporting one end")
    return EdgeFSolution(br.s_c, beta_c, solve_beta_o(br), phase,
                         s_hub, value_hub, s_clique, value_clique,
                         s_star, a_star, b_star, psi, ambiguous, warnings)


def monotone_selection_check(motif, gamma, betas, shift=1.0, tol=1e-7):
    """Branch maximizers must be nondecreasing in beta (per branch)."""
    betas = sorted(float(b) for b in betas)
    rows = []
    ok = True
    prev_hub = prev_clique = -math.inf
    for beta in betas:
        sol = edge_f_solve(EdgeFModel(motif, beta, gamma, shift))
        rows.append((beta, sol.s_hub, sol.s_clique, sol.phase))
        if sol.s_hub < prev_hub - tol * (1.0 + abs(prev_hub)):
            ok = False
        prev_hub = max(prev_hub, sol.s_hub)
        if sol.s_clique is not None:
            if sol.s_clique < prev_clique - tol * (1.0 + abs(prev_clique)):
                ok = False
            prev_clique = max(prev_clique, sol.s_clique)
    return ok, rows

"""Single-edge heat-bath dynamics for tilted random graphs, exact enumeration
at tiny sizes, and degree-threshold structure detection with certificates.

The stationary law tilts ER(p) by exp(r * H(G/p)) where H applies the tilt
function h to the homomorphism density vector.  Each step resamples one
uniformly chosen pair with the exact conditional probability, so detailed
balance holds by construction.  Structure detection thresholds degrees for
hub rows, then greedily densifies the high-degree remainder into an
almost-clique, and reports edge-count and spectral certificates.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import CapabilityError, DomainError
from .hamiltonian import HamiltonianSpec, h_value, psi_solve, validate_hamiltonian
from .motifs import WeightTable, _as_matrix, hom_density, hom_density_delta, rate, validate_family
from .nmf import CliqueHub

CLAMP = 700.0
ENUM_MAX_VERTICES = 6
KERNEL_MAX_STATES = 4096
RESYNC_SWEEPS = 64


def _sigmoid(z):
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def _live_spec(spec):
    """Drop zero-beta terms; return (effective spec or None, family, delta).

    A spec whose surviving term list is empty and has no callback represents
    H identically zero and is returned as None.
    """
    if spec is None:
        return None, (), None
    terms = tuple(t for t in spec.terms if t.beta != 0.0)
    if not terms and spec.callback is None:
        return None, tuple(spec.family), validate_family(
            spec.family, allow_mixed_max_degree=True).delta
    live = HamiltonianSpec(tuple(spec.family), terms,
                           allow_degenerate=spec.allow_degenerate,
                           callback=spec.callback)
    report = validate_hamiltonian(live)
    if not report.ok:
        raise DomainError("; ".join(m for _, m in report.errors))
    return live, tuple(live.family), report.delta


def pair_list(n):
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def chain_rng(seed, chain):
    """Counter-based generator stream, fully determined by (seed, chain)."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(chain),))
    return np.random.Generator(np.random.Philox(ss))


class ErgmChain:
    """Mutable single-chain state: adjacency, cached densities, counters."""

    def __init__(self, n, p, spec=None, adjacency=None):
        if n < 2:
            raise DomainError("need at least two vertices")
        if not 0.0 < p < 1.0:
            raise DomainError("p must lie in (0, 1)")
        self.n = int(n)
        self.p = float(p)
        self.spec, self.family, self.delta = _live_spec(spec)
        self.r = rate(n, p, self.delta) if self.spec is not None else 0.0
        self.logit = math.log(p / (1.0 - p))
        if adjacency is None:
            adj = np.zeros((n, n))
        else:
            adj = np.array(_as_matrix(adjacency), dtype=float)
            if adj.shape != (n, n):
                raise DomainError("adjacency shape mismatch")
            if not np.all((adj == 0.0) | (adj == 1.0)):
                raise DomainError("adjacency must be binary")
        np.fill_diagonal(adj, 0.0)
        self.adj = adj
        self.pairs = pair_list(n)
        self.t = self._fresh_t()
        self.steps = 0
        self.sweeps = 0
        self.max_drift = 0.0

    def _fresh_t(self):
        return np.array([hom_density(f, self.adj, scale=self.p)
                         for f in self.family])

    def edge_probability(self, i, j):
        """Heat-bath probability that pair {i, j} is set to 1."""
        if self.spec is None:
            return self.p
        deltas = np.array([hom_density_delta(f, self.adj, i, j, scale=self.p)
                           for f in self.family])
        present = self.adj[i, j] != 0.0
        t_hi = self.t if present else self.t + deltas
        t_lo = self.t - deltas if present else self.t
        dh = float(h_value(self.spec, t_hi) - h_value(self.spec, t_lo))
        z = min(CLAMP, max(-CLAMP, self.r * dh)) + self.logit
        return _sigmoid(z)

    def set_edge(self, i, j, value):
        value = 1.0 if value else 0.0
        if self.adj[i, j] == value:
            return
        if self.family:
            deltas = np.array([hom_density_delta(f, self.adj, i, j, scale=self.p)
                               for f in self.family])
            self.t = self.t + deltas if value else self.t - deltas
        self.adj[i, j] = value
        self.adj[j, i] = value

    def step(self, rng):
        k = int(rng.integers(len(self.pairs)))
        i, j = self.pairs[k]
        q = self.edge_probability(i, j)
        self.set_edge(i, j, rng.random() < q)
        self.steps += 1

    def sweep(self, rng):
        for _ in range(len(self.pairs)):
            self.step(rng)
        self.sweeps += 1
        if self.sweeps % RESYNC_SWEEPS == 0:
            self.resync()

    def resync(self):
        """Replace cached densities with a fresh computation; track drift."""
        fresh = self._fresh_t()
        if len(fresh):
            drift = float(np.max(np.abs(fresh - self.t) / (1.0 + np.abs(fresh))))
            self.max_drift = max(self.max_drift, drift)
        self.t = fresh
        return self.max_drift

    def edge_count(self):
        return int(round(self.adj.sum() / 2.0))

    def table(self):
        return WeightTable(self.adj.copy())


def glauber_step(chain, rng):
    chain.step(rng)
    return chain


# ---------------------------------------------------------------------------
# exact enumeration and kernels


@dataclass
class EnumerationResult:
    lam: float
    log_z: float
    nu: np.ndarray
    t_table: np.ndarray
    pairs: list


def _state_tables(n, p, spec):
    live, family, _ = _live_spec(spec)
    pairs = pair_list(n)
    m = len(pairs)
    states = 1 << m
    t_table = np.zeros((states, len(family)))
    if live is not None:
        for s in range(states):
            adj = np.zeros((n, n))
            for k, (i, j) in enumerate(pairs):
                if s >> k & 1:
                    adj[i, j] = adj[j, i] = 1.0
            t_table[s] = [hom_density(f, adj, scale=p) for f in family]
    return live, pairs, t_table


def exact_enumerate(n, p, spec=None, engine="logsumexp"):
    """Exhaustive tilted law over all graphs on n vertices.

    Returns the log normalizing constant relative to ER(p), the partition
    function on the absolute scale, and the exact distribution over states
    (bit k of the state index is pair k of pair_list(n)).
    """
    if n > ENUM_MAX_VERTICES:
        raise CapabilityError("exact enumeration supports n <= %d"
                              % ENUM_MAX_VERTICES)
    if not 0.0 < p < 1.0:
        raise DomainError("p must lie in (0, 1)")
    live, pairs, t_table = _state_tables(n, p, spec)
    m = len(pairs)
    states = 1 << m
    r = rate(n, p,
             validate_family(live.family, allow_mixed_max_degree=True).delta) \
        if live is not None else 0.0
    ecount = np.array([bin(s).count("1") for s in range(states)])
    log_base = ecount * math.log(p) + (m - ecount) * math.log1p(-p)
    if live is None:
        lam = 0.0
        log_w = log_base
    else:
        tilt = np.array([min(CLAMP, max(-CLAMP, r * float(h_value(live, t_table[s]))))
                         for s in range(states)])
        log_w = log_base + tilt
        if engine == "logsumexp":
            lam = float(logsumexp(log_w))
        elif engine == "direct":
            total = 0.0
            for s in range(states):
                w = 1.0
                for k in range(m):
                    w *= p if s >> k & 1 else 1.0 - p
                w *= math.exp(min(CLAMP, max(-CLAMP,
                                             r * float(h_value(live, t_table[s])))))
                total += w
            lam = math.log(total)
        else:
            raise DomainError("unknown engine %r" % engine)
    nu = np.exp(log_w - (lam if live is not None else 0.0))
    total = float(nu.sum())
    if abs(total - 1.0) > 1e-12:
        raise DomainError("enumeration failed to normalize")
    nu = nu / total
    assert abs(float(nu.sum()) - 1.0) <= 1e-14
    log_z = lam - m * math.log1p(-p)
    return EnumerationResult(lam=lam, log_z=log_z, nu=nu, t_table=t_table,
                             pairs=pairs)


def transition_matrix(n, p, spec=None):
    """Single-step heat-bath kernel over all 2^C(n,2) states."""
    pairs = pair_list(n)
    m = len(pairs)
    states = 1 << m
    if states > KERNEL_MAX_STATES:
        raise CapabilityError("kernel supports at most %d states"
                              % KERNEL_MAX_STATES)
    live, pairs, t_table = _state_tables(n, p, spec)
    r = rate(n, p,
             validate_family(live.family, allow_mixed_max_degree=True).delta) \
        if live is not None else 0.0
    logit = math.log(p / (1.0 - p))
    kernel = np.zeros((states, states))
    for s in range(states):
        for k in range(m):
            hi = s | (1 << k)
            lo = s & ~(1 << k)
            if live is None:
                q = p
            else:
                dh = float(h_value(live, t_table[hi])
                           - h_value(live, t_table[lo]))
                q = _sigmoid(min(CLAMP, max(-CLAMP, r * dh)) + logit)
            kernel[s, hi] += q / m
            kernel[s, lo] += (1.0 - q) / m
    return kernel


def _probability_table(n, p, spec):
    live, pairs, t_table = _state_tables(n, p, spec)
    m = len(pairs)
    states = 1 << m
    r = rate(n, p,
             validate_family(live.family, allow_mixed_max_degree=True).delta) \
        if live is not None else 0.0
    logit = math.log(p / (1.0 - p))
    table = []
    for s in range(states):
        row = []
        for k in range(m):
            if live is None:
                row.append(p)
            else:
                dh = float(h_value(live, t_table[s | (1 << k)])
                           - h_value(live, t_table[s & ~(1 << k)]))
                row.append(_sigmoid(min(CLAMP, max(-CLAMP, r * dh)) + logit))
        table.append(row)
    return table, m


def empirical_distribution(n, p, spec=None, steps=10 ** 6, seed=0, chain=0,
                           burnin=0):
    """State-occupation frequencies of a heat-bath chain started empty."""
    table, m = _probability_table(n, p, spec)
    rng = chain_rng(seed, chain)
    ks = rng.integers(0, m, size=steps + burnin).tolist()
    us = rng.random(steps + burnin).tolist()
    counts = [0] * (1 << m)
    state = 0
    for idx, (k, u) in enumerate(zip(ks, us)):
        bit = 1 << k
        if u < table[state][k]:
            state |= bit
        else:
            state &= ~bit
        if idx >= burnin:
            counts[state] += 1
    return np.array(counts, dtype=float) / float(steps)


def total_variation(dist_a, dist_b):
    return 0.5 * float(np.abs(np.asarray(dist_a) - np.asarray(dist_b)).sum())


# ---------------------------------------------------------------------------
# spectral distance and structure certificates


def spectral_distance(x, y, restarts=3, tol=1e-6, max_iter=2000, seed=0):
    """Operator norm of the difference by power iteration, 3 random restarts."""
    a = _as_matrix(x)
    b = _as_matrix(y)
    if a.shape != b.shape:
        raise DomainError("shape mismatch")
    diff = a - b
    n = diff.shape[0]
    if not np.any(diff):
        return 0.0
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(restarts):
        v = rng.standard_normal(n)
        v /= np.linalg.norm(v)
        prev = 0.0
        for _ in range(max_iter):
            w = diff @ v
            norm = float(np.linalg.norm(w))
            if norm == 0.0:
                break
            v = w / norm
            if abs(norm - prev) <= tol * max(1.0, norm):
                prev = norm
                break
            prev = norm
        best = max(best, prev)
    return best


def almost_certificate(adj, clique, hub, p, delta):
    """Edge-count slack: the smallest xi for which the clique block has at
    least |I|^2 - 2 xi n^2 p^delta (ordered) ones and the hub rows carry at
    least |J|(n-|J|) - xi n^2 p^delta edges to the outside."""
    a = _as_matrix(adj)
    n = a.shape[0]
    scale = float(n) ** 2 * p ** delta
    xi = 0.0
    clique = np.asarray(sorted(clique), dtype=int)
    hub = np.asarray(sorted(hub), dtype=int)
    if clique.size >= 2:
        got = float(a[np.ix_(clique, clique)].sum())
        deficit = clique.size ** 2 - got
        xi = max(xi, deficit / (2.0 * scale))
    if hub.size >= 1:
        comp = np.array([v for v in range(n) if v not in set(hub.tolist())],
                        dtype=int)
        got = float(a[np.ix_(hub, comp)].sum())
        deficit = hub.size * (n - hub.size) - got
        xi = max(xi, deficit / scale)
    return xi


def spectral_certificate(adj, clique, hub, p, delta, seed=0):
    """Spectral slack: ||G - Q^{I,J}|| / (n p^{delta/2})."""
    a = _as_matrix(adj)
    n = a.shape[0]
    overlay = CliqueHub(n, p, tuple(int(v) for v in clique),
                        tuple(int(v) for v in hub))
    dist = spectral_distance(a, overlay.matrix(), seed=seed)
    return dist / (n * p ** (delta / 2.0))


def discrepancy_samples(adj, clique, hub, p, delta, xi, count=20, seed=0):
    """Sampled block-count checks against the spectral slack xi.

    Inside the clique block and across the hub bipartition the one-density
    deficit is compared to xi sqrt(n^2 p^delta / (|A||B|)); outside both
    structures the p-relative error is compared to
    xi sqrt(n^2 p^(delta-2) / (|A||B|)).
    """
    a = _as_matrix(adj)
    n = a.shape[0]
    rng = np.random.default_rng(seed)
    clique = list(clique)
    hub = list(hub)
    hub_set = set(hub)
    comp_hub = [v for v in range(n) if v not in hub_set]
    outside = [v for v in comp_hub if v not in set(clique)]
    rows = []
    for _ in range(count):
        kind = str(rng.choice(["clique", "hub", "outside"]))
        if kind == "clique" and len(clique) >= 4:
            size = max(2, len(clique) // 2)
            a_set = rng.choice(clique, size=size, replace=False)
            b_set = rng.choice(clique, size=size, replace=False)
        elif kind == "hub" and hub and comp_hub:
            a_set = np.asarray(hub)
            size = max(1, len(comp_hub) // 2)
            b_set = rng.choice(comp_hub, size=size, replace=False)
        elif kind == "outside" and len(outside) >= 4:
            size = max(2, len(outside) // 2)
            a_set = rng.choice(outside, size=size, replace=False)
            b_set = rng.choice(outside, size=size, replace=False)
        else:
            continue
        block = float(a[np.ix_(np.sort(a_set), np.sort(b_set))].sum())
        sizes = len(a_set) * len(b_set)
        if kind in ("clique", "hub"):
            lhs = 1.0 - block / sizes
            rhs = xi * math.sqrt(n ** 2 * p ** delta / sizes)
            ok = -1e-9 <= lhs < rhs
        else:
            lhs = abs(block / (p * sizes) - 1.0)
            rhs = xi * math.sqrt(n ** 2 * p ** (delta - 2.0) / sizes)
            ok = lhs < rhs
        rows.append({"kind": kind, "a_size": int(len(a_set)),
                     "b_size": int(len(b_set)), "lhs": lhs, "rhs": rhs,
                     "ok": bool(ok)})
    return rows


@dataclass
class StructureReport:
    clique: tuple
    hub: tuple
    xi1: float
    xi2: float
    thresholds: dict
    target_sizes: dict = None
    discrepancy: list = field(default_factory=list)
    warnings: list = field(default_factory=list)


def detect_structure(adj, p, delta, delta_hub=0.5, a_hint=None, b_hint=None,
                     xi=0.05, spectral=True, seed=0, samples=0):
    """Degree-threshold hub detection plus greedy clique densification.

    Hub rows are those of degree at least (1 - delta_hub) n.  Clique
    candidates are the remaining vertices whose degree away from the hub is
    at least np + sqrt(n); the candidate set is peeled (drop the vertex of
    lowest inner degree while the inner density is below 1 - 2 xi) and then
    greedily grown back.  Certificates are computed for the detected pair.
    """
    a = _as_matrix(adj)
    if not np.all((a == 0.0) | (a == 1.0)):
        raise DomainError("detection needs a binary graph")
    n = a.shape[0]
    deg = a.sum(axis=1)
    hub = [v for v in range(n) if deg[v] >= (1.0 - delta_hub) * n]
    hub_set = set(hub)
    rest = np.array([v for v in range(n) if v not in hub_set], dtype=int)
    sub = a[np.ix_(rest, rest)]
    deg_rest = sub.sum(axis=1)
    thr = n * p + math.sqrt(n)
    cand = [int(rest[i]) for i in range(len(rest)) if deg_rest[i] >= thr]

    group = list(cand)
    target = 1.0 - 2.0 * xi
    while len(group) >= 3:
        block = a[np.ix_(group, group)]
        inner = block.sum(axis=1)
        density = float(inner.sum()) / (len(group) * (len(group) - 1))
        if density >= target:
            break
        drop = int(np.argmin(inner))
        group.pop(drop)
    if len(group) < 3:
        group = []
    if group:
        others = [v for v in range(n) if v not in hub_set and v not in set(group)]
        for v in others:
            inner_deg = float(a[v, group].sum())
            if inner_deg >= target * len(group):
                grown = group + [v]
                block = a[np.ix_(grown, grown)]
                density = float(block.sum()) / (len(grown) * (len(grown) - 1))
                if density >= target:
                    group = grown
        group = sorted(group)

    clique = tuple(group)
    hub = tuple(sorted(hub))
    xi1 = almost_certificate(a, clique, hub, p, delta)
    xi2 = spectral_certificate(a, clique, hub, p, delta, seed=seed) \
        if spectral else math.nan
    targets = None
    if a_hint is not None or b_hint is not None:
        targets = {}
        if a_hint is not None:
            targets["clique"] = int(math.floor(math.sqrt(a_hint * p ** delta) * n))
        if b_hint is not None:
            targets["hub"] = int(math.floor(b_hint * p ** delta * n))
    disc = []
    if samples and spectral:
        disc = discrepancy_samples(a, clique, hub, p, delta, xi2,
                                   count=samples, seed=seed)
    return StructureReport(clique=clique, hub=hub, xi1=xi1, xi2=xi2,
                           thresholds={"hub_degree": (1.0 - delta_hub) * n,
                                       "clique_degree": thr},
                           target_sizes=targets, discrepancy=disc)


# ---------------------------------------------------------------------------
# experiment driver


@dataclass
class ExperimentResult:
    columns: list
    rows: list
    reports: dict
    summary: dict
    tables: dict = field(default_factory=dict)


def run_experiment(config):
    """Run heat-bath chains and record thinned trajectory rows.

    Config keys: n, p, sweeps (required); spec, chains, burnin, thin, seed,
    delta_hub, xi, detect, spectral, start ("empty" or "er").  Rows follow
    the trajectory layout (chain, sweep, edges, t_1..t_m, hubSize,
    cliqueSize, xi1, xi2).
    """
    cfg = dict(config)
    try:
        n = int(cfg.pop("n"))
        p = float(cfg.pop("p"))
        sweeps = int(cfg.pop("sweeps"))
    except KeyError as missing:
        raise DomainError("config missing %s" % missing)
    spec = cfg.pop("spec", None)
    chains = int(cfg.pop("chains", 1))
    burnin = int(cfg.pop("burnin", 0))
    thin = int(cfg.pop("thin", 1))
    seed = int(cfg.pop("seed", 0))
    delta_hub = float(cfg.pop("delta_hub", 0.5))
    xi = float(cfg.pop("xi", 0.05))
    detect = bool(cfg.pop("detect", True))
    spectral = bool(cfg.pop("spectral", n <= 512))
    start = cfg.pop("start", "er")
    if cfg:
        raise DomainError("unknown config keys: %s" % sorted(cfg))
    if not 0.0 < p < 1.0:
        raise DomainError("p must lie in (0, 1)")
    if sweeps < 1:
        raise DomainError("sweeps must be positive")
    if chains < 1 or burnin < 0 or thin < 1:
        raise DomainError("bad chain controls")
    if start not in ("empty", "er"):
        raise DomainError("start must be 'empty' or 'er'")

    live, family, delta = _live_spec(spec)
    m = len(family)
    columns = (["chain", "sweep", "edges"]
               + ["t_%d" % (k + 1) for k in range(m)]
               + ["hubSize", "cliqueSize", "xi1", "xi2"])
    rows = []
    reports = {}
    tables = {}
    summary_drift = 0.0
    for c in range(chains):
        rng = chain_rng(seed, c)
        adjacency = None
        if start == "er":
            u = rng.random((n, n))
            adj = np.triu(u < p, k=1).astype(float)
            adjacency = adj + adj.T
        chain = ErgmChain(n, p, spec, adjacency=adjacency)
        for _ in range(burnin):
            chain.sweep(rng)
        for s in range(1, sweeps + 1):
            chain.sweep(rng)
            if s % thin:
                continue
            if detect:
                rep = detect_structure(chain.adj, p,
                                       delta if delta is not None else 1,
                                       delta_hub=delta_hub, xi=xi,
                                       spectral=spectral, seed=seed)
                hub_size, clique_size = len(rep.hub), len(rep.clique)
                xi1, xi2 = rep.xi1, rep.xi2
            else:
                rep = None
                hub_size = clique_size = 0
                xi1 = xi2 = math.nan
            rows.append([c, s, chain.edge_count()]
                        + [float(v) for v in chain.t]
                        + [hub_size, clique_size, xi1, xi2])
        chain.resync()
        reports[c] = rep
        tables[c] = np.array(chain.adj)
        summary_drift = max(summary_drift, chain.max_drift)
    rows.sort(key=lambda row: (row[0], row[1]))

    summary = {"cache_drift": summary_drift, "rate": rate(n, p, delta)
               if delta is not None else None}
    if live is not None:
        try:
            psi = psi_solve(live)
            summary["limit_optimizers"] = psi.optimizers
            summary["target_sizes"] = [
                (int(math.floor(math.sqrt(max(a, 0.0) * p ** delta) * n)),
                 int(math.floor(max(b, 0.0) * p ** delta * n)))
                for a, b in psi.optimizers]
        except Exception as err:  # degenerate objectives stay reportable
            summary["limit_error"] = str(err)
    return ExperimentResult(columns=columns, rows=rows, reports=reports,
                            summary=summary, tables=tables)

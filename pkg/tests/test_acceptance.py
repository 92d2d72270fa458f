"""End-to-end acceptance checks, one test per criterion.

Run with `pytest -v tests/test_acceptance.py` to get one pass/fail line per
criterion.  Criterion 3 asserts optimizer multiplicities that the solver
does not reproduce (the two named scenarios have a unique optimizer with a
strictly positive runner-up gap); that test fails on purpose rather than
relabeling a clear gap as a tie.
"""

import math
import time

import numpy as np
from scipy.optimize import brentq

from cliquehub import finner
from cliquehub.motifs import (Motif, motif_from_name, hom_sum, hom_sum_delta,
                              hom_sum_exhaustive, hom_sum_fast,
                              hom_sum_generic, rate)
from cliquehub.planar import phi_solve
from cliquehub.hamiltonian import (EdgeFModel, HamiltonianSpec,
                                   HamiltonianTerm, edge_f_solve, psi_solve,
                                   solve_s_c, validate_hamiltonian)
from cliquehub.nmf import NmfProblem, nmf_solve, phi_np_solve, clear_phi_cache
from cliquehub.sampler import (almost_certificate, detect_structure,
                               empirical_distribution, exact_enumerate,
                               spectral_certificate, total_variation,
                               transition_matrix)


def triangle_spec(beta):
    return HamiltonianSpec(("C3",),
                           (HamiltonianTerm(0, beta, 1.0, 1.0 / 3.0),))


def test_criterion_1_edge_triangle_closed_forms():
    # beta_c everywhere, plus the winning phase's optimizer size on each
    # grid cell; the losing branch is clamped at s_c by construction so its
    # unrestricted closed form does not apply there
    t0 = time.perf_counter()
    checked_hub = checked_clique = 0
    for gamma in (0.5, 1.0, 1.5):
        want_bc = (1.0 / gamma) * (((6 - 2 * gamma) / (6 - 3 * gamma))
                                   ** ((2 - gamma) * (3 - gamma) / gamma))
        for beta in (0.25, 0.5, 1.0, 2.0, 4.0):
            sol = edge_f_solve(EdgeFModel("C3", beta, gamma))
            assert abs(sol.beta_c - want_bc) <= 1e-6 * want_bc
            assert (sol.phase == "clique") == (beta > want_bc)
            if sol.phase == "clique":
                want_a = (gamma * beta) ** (2.0 / (2.0 - gamma))
                assert abs(sol.a_star - want_a) <= 1e-6 * want_a
                checked_clique += 1
            else:
                want_b = (gamma * beta) ** (3.0 / (3.0 - gamma)) / 3.0
                assert abs(sol.b_star - want_b) <= 1e-6 * want_b
                checked_hub += 1
    elapsed = time.perf_counter() - t0
    assert checked_hub >= 5 and checked_clique >= 5
    assert elapsed < 1.0, "budget exceeded: %.2fs" % elapsed
    print("criterion 1: PASS (%.2fs)" % elapsed)


def test_criterion_2_triangle_piecewise_law():
    for k in range(201):
        s = 0.1 * k
        sol = phi_solve(["C3"], [s])
        law = min(0.5 * s ** (2.0 / 3.0), s / 3.0)
        assert abs(sol.value - law) <= 1e-8, s

    def branch_gap(s):
        sol = phi_solve(["C3"], [s])
        hub = min(obj for a, b, obj in sol.candidates if a <= 1e-14)
        clique = min(obj for a, b, obj in sol.candidates
                     if b <= 1e-14 and a > 1e-14)
        return clique - hub

    s_c = brentq(branch_gap, 1.0, 10.0, xtol=1e-12)
    assert abs(s_c - 3.375) <= 1e-9
    assert abs(solve_s_c(motif_from_name("C3")) - 3.375) <= 1e-9
    print("criterion 2: PASS (s_c dev %.1e)" % abs(s_c - 3.375))


def test_criterion_3_figure_scenario_multiplicities():
    family = ["K12", "C3", "C4"]
    sol3 = phi_solve(family, (12.0, 88.0, 1000.0), tie_tol=1e-6)
    sol2 = phi_solve(family, (4.0, 25.0, 100.0), tie_tol=1e-6)
    for sol in (sol3, sol2):
        for o in sol.optimizers:
            assert abs(0.5 * o.a + o.b - sol.value) <= 1e-8

    def runner_up_gap(sol):
        taken = [(o.a, o.b) for o in sol.optimizers]
        gaps = [obj - sol.value for a, b, obj in sol.candidates
                if all(abs(a - x) + abs(b - y) > 1e-8 for x, y in taken)]
        return min(gaps) if gaps else float("inf")

    assert len(sol3.optimizers) == 2, (
        "s=(12,88,1000) solver finds %d optimizer(s); nearest rival "
        "objective gap %.7f exceeds the 1e-6 tie window"
        % (len(sol3.optimizers), runner_up_gap(sol3)))
    assert len(sol2.optimizers) >= 2, (
        "s=(4,25,100) solver finds %d optimizer(s); nearest rival "
        "objective gap %.7f exceeds the 1e-6 tie window"
        % (len(sol2.optimizers), runner_up_gap(sol2)))
    print("criterion 3: PASS")


def random_valid_spec(rng):
    pool = ("K12", "C3", "C4", "K13")
    while True:
        size = int(rng.integers(1, 5))
        family = tuple(str(x) for x in rng.choice(pool, size=size,
                                                  replace=False))
        terms = []
        for k, name in enumerate(family):
            m = motif_from_name(name)
            cap = m.max_degree / m.edge_count
            beta = float(rng.uniform(0.1, 2.0))
            shift = float(rng.choice([1.0, 1.0, 1.5]))
            # stay well inside the growth bound so the optimizer box is
            # searchable; draws at ~98% of the bound put the maximum at
            # astronomically large amplitudes
            gamma = float(rng.uniform(0.1, 0.85)) * cap
            terms.append(HamiltonianTerm(k, beta, shift, gamma))
        spec = HamiltonianSpec(family, tuple(terms))
        if validate_hamiltonian(spec).ok:
            return spec


def test_criterion_4_psi_duality():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(20):
        spec = random_valid_spec(rng)
        sol = psi_solve(spec)
        gap = abs(sol.psi_direct - sol.psi_dual)
        tol = 1e-6 * (1.0 + abs(sol.psi))
        worst = max(worst, gap / tol)
        assert gap <= tol, (spec, gap, tol)
    elapsed = time.perf_counter() - t0
    assert elapsed < 30.0, "budget exceeded: %.1fs" % elapsed
    print("criterion 4: PASS (%.1fs, worst gap %.3f of tol)"
          % (elapsed, worst))


ACCEPTANCE_MOTIFS = [
    motif_from_name(n) for n in
    ("K11", "K12", "K13", "K14", "C3", "C4", "C5", "K3", "K4", "K5")
] + [
    Motif("P3", 3, ((0, 1), (1, 2))),
    Motif("P4", 4, ((0, 1), (1, 2), (2, 3))),
    Motif("paw", 4, ((0, 1), (0, 2), (1, 2), (2, 3))),
    Motif("diamond", 4, ((0, 1), (0, 2), (1, 2), (1, 3), (2, 3))),
    Motif("bull", 5, ((0, 1), (0, 2), (1, 2), (1, 3), (2, 4))),
]


def random_binary(rng, n, p=0.5):
    upper = np.triu(rng.random((n, n)) < p, 1)
    x = (upper | upper.T).astype(float)
    return x


def test_criterion_5_engine_agreement():
    assert all(m.vertices <= 5 for m in ACCEPTANCE_MOTIFS)
    rng = np.random.default_rng(11)
    for trial in range(200):
        n = int(rng.integers(4, 11))
        x = random_binary(rng, n, p=float(rng.uniform(0.2, 0.8)))
        for m in ACCEPTANCE_MOTIFS:
            exact = hom_sum_exhaustive(m, x)
            assert exact == round(exact), (m.name, exact)
            assert hom_sum_generic(m, x) == exact, m.name
            fast = hom_sum_fast(m, x)
            if fast is not None:
                assert fast == exact, m.name
    # incremental deltas against full recomputation
    delta_motifs = [motif_from_name(n)
                    for n in ("C3", "C4", "K12", "K4")] + [
        Motif("P4", 4, ((0, 1), (1, 2), (2, 3)))]
    n = 12
    x = random_binary(rng, n, p=0.5)
    before = {m.name: hom_sum(m, x) for m in delta_motifs}
    for toggle in range(1000):
        i = int(rng.integers(0, n))
        j = int(rng.integers(0, n))
        if i == j:
            continue
        # deltas report the with-edge minus without-edge difference, so
        # toggling an existing edge off subtracts the delta
        sign = 1.0 if x[i, j] == 0.0 else -1.0
        for m in delta_motifs:
            d = hom_sum_delta(m, x, i, j)
            x[i, j] = x[j, i] = 1.0 - x[i, j]
            full = hom_sum(m, x)
            x[i, j] = x[j, i] = 1.0 - x[i, j]
            got = before[m.name] + sign * d
            assert abs(got - full) <= 1e-10 * max(1.0, abs(full)), m.name
        x[i, j] = x[j, i] = 1.0 - x[i, j]
        before = {m.name: hom_sum(m, x) for m in delta_motifs}
    print("criterion 5: PASS")


def test_criterion_6_sampler_exactness():
    for p in (0.3, 0.5):
        for beta in (0.0, 1.0):
            spec = triangle_spec(beta)
            enum = exact_enumerate(4, p, spec)
            kernel = transition_matrix(4, p, spec)
            residual = float(np.max(np.abs(enum.nu @ kernel - enum.nu)))
            assert residual <= 1e-12, (p, beta, residual)
            other = exact_enumerate(4, p, spec, engine="direct")
            assert abs(enum.lam - other.lam) <= 1e-10
            if beta == 0.0:
                assert enum.lam == 0.0
                assert other.lam == 0.0
            for seed in range(3):
                emp = empirical_distribution(4, p, spec, steps=10 ** 6,
                                             seed=seed)
                tv = total_variation(emp, enum.nu)
                assert tv < 0.05, (p, beta, seed, tv)
    print("criterion 6: PASS")


def test_criterion_7_finner_suite():
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(10 ** 4):
        inst = finner.random_instance(rng)
        worst = max(worst, finner.finner_integral(inst))
    assert worst <= 1.0 + 1e-10, worst

    for _ in range(10 ** 4):
        lam = float(rng.uniform(0.05, 0.95))
        m = int(rng.integers(2, 6))
        nu = rng.dirichlet(np.ones(m))
        g = rng.uniform(0.2, 1.5, size=m)
        g /= float(np.dot(nu, g))
        eps, bound, l1, ok = finner.holder_stability_check(g, lam, nu)
        assert ok, (eps, bound, l1)

    worst_residual = 0.0
    for seed in range(100):
        inst, hs = finner.tensor_product_instance(
            np.random.default_rng(seed))
        family, residuals = finner.recover_factors(inst)
        worst_residual = max(worst_residual, max(residuals))
    for seed in range(30):
        inst = finner.calderon_instance(np.random.default_rng(seed))
        assert finner.finner_integral(inst) <= 1.0 + 1e-10
    assert worst_residual <= 1e-9, worst_residual
    elapsed = time.perf_counter() - t0
    assert elapsed < 120.0, "budget exceeded: %.1fs" % elapsed
    print("criterion 7: PASS (%.1fs, max integral %.6f, worst residual %.1e)"
          % (elapsed, worst, worst_residual))


def test_criterion_8_certificates_and_trends():
    # value floors and witness dominance on a batch of solves, plus the
    # monotonicity surrogate for the asymptotic claims; the asymptotics
    # themselves are out of reach at these sizes, so the trend numbers are
    # logged rather than asserted against a limit
    trend = []
    for n in (32, 64, 128):
        prob = NmfProblem(n, 0.2, spec=triangle_spec(1.0))
        sol = nmf_solve(prob, seed=0)
        r = rate(n, 0.2, 2)
        witness = sol.diagnostics["witness_value"]
        assert sol.value >= witness - 1e-9
        assert sol.value >= 0.0
        trend.append((n, sol.value / r, witness / r, sol.grad_norm))
    for n, v, w, g in trend:
        print("nmf trend n=%3d: value/rate=%.4f witness/rate=%.4f "
              "grad=%.1e" % (n, v, w, g))

    clear_phi_cache()
    chains = [
        (48, ("C3",), [(0.5,), (1.0,), (2.0,), (4.0,), (8.0,)]),
        (40, ("K12", "C3"), [(0.5, 0.4), (1.0, 0.8), (2.0, 1.6),
                             (4.0, 3.2), (8.0, 6.4)]),
    ]
    for n, family, points in chains:
        values = {}
        for s in sorted(points, reverse=True):
            prob = NmfProblem(n, 0.2, s=s, family=family)
            sol = phi_np_solve(prob, seed=0)
            assert sol.value <= sol.diagnostics["witness_value"] + 1e-9
            values[s] = sol.value
        for lo, hi in zip(points, points[1:]):
            assert values[lo] <= values[hi] + 1e-9, (family, lo, hi)
    print("criterion 8: PASS")


def planted_adjacency(rng, n, p, clique, hub):
    upper = np.triu(rng.random((n, n)) < p, 1)
    adj = (upper | upper.T).astype(float)
    idx = np.array(clique)
    adj[np.ix_(idx, idx)] = 1.0
    adj[idx, idx] = 0.0
    for h in hub:
        adj[h, :] = 1.0
        adj[:, h] = 1.0
        adj[h, h] = 0.0
    return adj


def test_criterion_9_structure_detection():
    n, p, delta = 2000, 0.05, 2
    planted_ok = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        picks = rng.choice(n, size=203, replace=False)
        clique = set(int(v) for v in picks[:200])
        hub = set(int(v) for v in picks[200:])
        adj = planted_adjacency(rng, n, p, sorted(clique), sorted(hub))
        report = detect_structure(adj, p, delta, spectral=False)
        got = set(report.clique)
        if (len(got & clique) >= 0.9 * len(clique)
                and set(report.hub) == hub):
            planted_ok += 1
    assert planted_ok >= 95, planted_ok

    er_quiet = 0
    for seed in range(100):
        rng = np.random.default_rng(10_000 + seed)
        upper = np.triu(rng.random((n, n)) < p, 1)
        adj = (upper | upper.T).astype(float)
        report = detect_structure(adj, p, delta, spectral=False)
        if len(report.clique) == 0 and len(report.hub) == 0:
            er_quiet += 1
    assert er_quiet >= 95, er_quiet

    # certificate containment on noisy planted fixtures
    m, q, d = 200, 0.15, 2.0
    floor = 1.0 / (m * q ** (d / 2.0))
    for seed in range(100):
        rng = np.random.default_rng(seed)
        k_i = int(rng.integers(20, 40))
        k_j = int(rng.integers(5, 15))
        clique = tuple(range(k_i))
        hub = tuple(range(k_i, k_i + k_j))
        g = planted_adjacency(rng, m, q, clique, hub)
        drop = rng.integers(0, k_i, size=(6, 2))
        for a, b in drop:
            if a != b:
                g[clique[a], clique[b]] = g[clique[b], clique[a]] = 0.0
        a_par = (k_i / m) ** 2 / q ** d
        b_par = (k_j / m) / q ** d
        xi1 = almost_certificate(g, clique, hub, q, d)
        xi2 = spectral_certificate(g, clique, hub, q, d)
        xi = max(xi2, 2.0 * floor)
        assert xi1 <= math.sqrt(max(a_par, b_par)) * xi + 1e-9, seed
    print("criterion 9: PASS (planted %d/100, quiet %d/100)"
          % (planted_ok, er_quiet))

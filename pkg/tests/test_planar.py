import math

import numpy as np
import pytest

from cliquehub.errors import DomainError
from cliquehub.motifs import motif_from_name, t_planar
from cliquehub.planar import PlanarProgram, phi_region_emit, phi_solve

FIGURE_FAMILY = ("K12", "C3", "C4")


def phi_c3_closed(s):
    # single triangle target: cheaper of the hub line and the clique curve
    return min(s / 3.0, 0.5 * s ** (2.0 / 3.0))


def test_single_triangle_closed_form():
    for s in (0.1, 0.5, 1.0, 2.0, 27 / 8, 5.0, 8.0, 20.0, 100.0):
        sol = phi_solve(["C3"], [s])
        assert sol.value == pytest.approx(phi_c3_closed(s), abs=1e-9)


def test_single_triangle_crossover_tie():
    sol = phi_solve(["C3"], [27 / 8])
    assert sol.value == pytest.approx(27 / 24, abs=1e-10)
    assert len(sol.optimizers) == 2
    pts = sorted((o.a, o.b) for o in sol.optimizers)
    assert pts[0][0] == pytest.approx(0.0, abs=1e-9)
    assert pts[0][1] == pytest.approx(1.125, abs=1e-8)
    assert pts[1][0] == pytest.approx(2.25, abs=1e-8)
    assert pts[1][1] == pytest.approx(0.0, abs=1e-9)


def test_single_triangle_branch_optimizers():
    # below the crossover the hub point wins, above it the clique point
    lo = phi_solve(["C3"], [1.0])
    assert len(lo.optimizers) == 1
    assert lo.optimizers[0].a == pytest.approx(0.0, abs=1e-9)
    assert lo.optimizers[0].b == pytest.approx(1 / 3, abs=1e-9)
    hi = phi_solve(["C3"], [8.0])
    assert len(hi.optimizers) == 1
    assert hi.optimizers[0].a == pytest.approx(4.0, abs=1e-7)
    assert hi.optimizers[0].b == pytest.approx(0.0, abs=1e-9)


def test_zero_targets():
    sol = phi_solve(FIGURE_FAMILY, [0.0, 0.0, 0.0])
    assert sol.value == 0.0
    assert len(sol.optimizers) == 1
    assert sol.optimizers[0].a == 0.0 and sol.optimizers[0].b == 0.0
    # a single positive target among zeros behaves like the single-motif case
    one = phi_solve(FIGURE_FAMILY, [0.0, 1.0, 0.0])
    assert one.value == pytest.approx(1 / 3, abs=1e-9)


def test_negative_target_rejected():
    with pytest.raises(DomainError):
        phi_solve(["C3"], [-0.5])
    with pytest.raises(DomainError):
        phi_solve(["C3"], [1.0, 2.0])  # length mismatch


def test_figure_scenarios():
    prog = PlanarProgram(FIGURE_FAMILY)

    a_sol = prog.solve(np.array([2.0, 15.0, 100.0]))
    assert a_sol.value == pytest.approx(-1 + math.sqrt(51), abs=1e-8)
    assert len(a_sol.optimizers) == 1
    assert a_sol.optimizers[0].a == pytest.approx(0.0, abs=1e-9)
    assert a_sol.optimizers[0].b == pytest.approx(-1 + math.sqrt(51), abs=1e-7)

    b_sol = prog.solve(np.array([2.0, 24.0, 100.0]))
    assert len(b_sol.optimizers) == 1
    assert b_sol.optimizers[0].a == pytest.approx(math.sqrt(84), rel=1e-7)
    assert b_sol.optimizers[0].b == pytest.approx(2.0, abs=1e-7)

    c_sol = prog.solve(np.array([4.0, 25.0, 100.0]))
    assert c_sol.value == pytest.approx(7.5868549612, abs=1e-8)
    assert c_sol.optimizers[0].a == pytest.approx(4.156578513, abs=1e-6)
    assert c_sol.optimizers[0].b == pytest.approx(5.508565705, abs=1e-6)
    # the clique-corner runner-up sits just above the optimum
    assert any(abs(a - math.sqrt(52)) < 1e-4 and abs(b - 4.0) < 1e-4
               and abs(gap - 0.01869631) < 1e-6
               for a, b, gap in c_sol.near_ties)

    d_sol = prog.solve(np.array([4.0, 31.5, 100.0]))
    assert len(d_sol.optimizers) == 1
    assert d_sol.optimizers[0].a == pytest.approx(19.5 ** (2 / 3), rel=1e-7)
    assert d_sol.optimizers[0].b == pytest.approx(4.0, abs=1e-7)

    f3 = prog.solve(np.array([12.0, 88.0, 1000.0]))
    assert f3.value == pytest.approx(12 + math.sqrt(166), abs=1e-8)
    assert len(f3.optimizers) == 1
    assert f3.optimizers[0].a == pytest.approx(math.sqrt(664), rel=1e-7)
    assert f3.optimizers[0].b == pytest.approx(12.0, abs=1e-7)
    assert any(abs(a - 8.902187) < 1e-4 and abs(b - 20.479654) < 1e-4
               and abs(gap - 0.0466486) < 1e-6
               for a, b, gap in f3.near_ties)


def test_optimizers_have_two_active_constraints():
    prog = PlanarProgram(FIGURE_FAMILY)
    rng = np.random.default_rng(23)
    for _ in range(40):
        s = rng.uniform(0.0, 60.0, size=3)
        sol = prog.solve(s)
        for opt in sol.optimizers:
            assert len(opt.active) >= 2, (s, opt)
            # feasibility of every reported optimizer
            for k, m in enumerate(FIGURE_FAMILY):
                t = t_planar(motif_from_name(m), opt.a, opt.b)
                assert t >= 1.0 + s[k] - 1e-6 * (1.0 + s[k])


def test_phi_monotone_and_scaling():
    prog = PlanarProgram(FIGURE_FAMILY)
    rng = np.random.default_rng(4)
    for _ in range(25):
        s = rng.uniform(0.0, 30.0, size=3)
        v = prog.solve(s).value
        bigger = s + rng.uniform(0.0, 5.0, size=3)
        assert prog.solve(bigger).value >= v - 1e-9
    # phi is positive once any target is positive
    assert prog.solve(np.array([0.0, 1e-4, 0.0])).value > 0.0


def test_program_excess_round_trip():
    prog = PlanarProgram(FIGURE_FAMILY)
    s = np.array([3.0, 11.0, 47.0])
    sol = prog.solve(s)
    opt = sol.optimizers[0]
    # the optimizer's own excess vector yields the same value
    again = prog.solve(prog.excess(opt.a, opt.b))
    assert again.value == pytest.approx(sol.value, rel=1e-9)


def test_region_emit_structure():
    rows, curves = phi_region_emit(FIGURE_FAMILY, [2.0, 15.0, 100.0],
                                   na=41, nb=41)
    assert len(rows) == 41 * 41
    some_feasible = [r for r in rows if r[2]]
    assert some_feasible
    for a, b, feas, obj in rows[:50]:
        assert obj == pytest.approx(0.5 * a + b, rel=1e-12)
    assert set(curves) == {0, 1, 2}
    for idx, pts in curves.items():
        assert len(pts) == 201

import math

import numpy as np
import pytest

import mfg_master as mm


def test_zero_potentials_leave_the_configuration_at_rest():
    psi = np.array([[0.1], [0.4], [0.8]])
    sol = mm.solve_pack(-0.1, psi, mm.PotentialSet.zero(1))
    assert np.array_equal(sol["anchor"], psi)
    assert sol["value"] == 0.0
    assert sol["report"]["converged"]


def test_straight_line_from_a_quarter():
    u0 = mm.TrigSeries(1, [([1], -1.0 / (2 * math.pi), 0.0)])
    P = mm.PotentialSet(mm.TrigSeries.zero(1), u0, mm.TrigSeries.zero(1))
    sol = mm.solve_pack(-0.1, np.array([[0.25]]), P)
    # the anchor y solves y + 0.1 sin(2 pi y) = 0.25
    y = sol["anchor"][0, 0]
    assert abs(y + 0.1 * math.sin(2 * math.pi * y) - 0.25) < 1e-12


def test_feedback_matches_finite_differences():
    P, psi = mm.random_instance(1, 6, 5)
    g = mm.grad_V(-0.05, psi, P)
    step = 1e-6
    bumped = psi.copy()
    bumped[2, 0] += step
    lowered = psi.copy()
    lowered[2, 0] -= step
    fd = (mm.value_V(-0.05, bumped, P) - mm.value_V(-0.05, lowered, P)) / (2 * step) * len(psi)
    assert abs(fd - g[2, 0]) < 1e-6 * (1 + abs(g[2, 0]))


def test_hj_residual_is_small():
    P, psi = mm.random_instance(1, 8, 9)
    assert mm.hj_residual(-0.05, psi, P) < 1e-4


def test_two_point_transport():
    w2sq, perm = mm.wasserstein2(np.array([[0.0], [0.3]]), np.array([[0.1], [0.9]]))
    assert abs(w2sq - 0.025) < 1e-15
    assert sorted(perm) == [0, 1]


def test_solver_failure_raises_with_kind():
    P, psi = mm.random_instance(1, 8, 3)
    opts = mm.SolveOptions()
    opts.max_iter = 20
    with pytest.raises(mm.MfgError) as info:
        mm.solve_pack(-5.0, psi, P, opts)
    assert info.value.kind == "no_convergence"


def test_options_reject_unknown_method():
    opts = mm.SolveOptions()
    opts.method = "newton-fd"
    assert opts.method == "newton-fd"
    with pytest.raises(mm.MfgError):
        opts.method = "bisection"

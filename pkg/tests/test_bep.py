from __future__ import annotations

import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sphardy.bep import (
    REPORT_FIELDS,
    _find_multiplier,
    bep2_system,
    estimate_mode,
    solve_bep1,
    solve_bep2,
    solve_bep3_adjoint,
    weak_convergence_bound,
    write_report,
)
from sphardy.continuation import adjoint_t, t_operator
from sphardy.errors import InvalidArgument, NumericalFailure
from sphardy.harmonics import index, ncoeffs


def _unit(n, m, nmax=24):
    e = np.zeros(ncoeffs(nmax))
    e[index(n, m)] = 1.0
    return e


def _noisy(p, level, rng):
    z = rng.standard_normal(p.phi.size)
    z[0] = 0.0
    return p.phi + level * z / np.linalg.norm(z)


def test_root_finder_simple():
    lam, _ = _find_multiplier(lambda x: 4.0 / (1 + x) ** 2, lambda x: -8.0 / (1 + x) ** 3, 1.0)
    assert lam == pytest.approx(1.0, rel=1e-12)


def test_root_finder_unbracketed():
    with pytest.raises(NumericalFailure):
        _find_multiplier(lambda x: 4.0, lambda x: 0.0, 1.0)


def test_bep1_exact_recovery(ctx24, pairs24):
    p = pairs24[0]
    sol = solve_bep1(ctx24, p.phi, 1.05 * np.linalg.norm(p.psi))
    assert not sol.constraint_active
    assert sol.objective <= 1e-10
    assert np.linalg.norm(sol.psi_c - p.psi) <= 1e-8 * np.linalg.norm(p.psi)


def test_bep1_saturation_and_monotone(ctx24, pairs24, rng):
    p = pairs24[1]
    f = _noisy(p, 1e-3, rng)
    tn = np.linalg.norm(p.psi)
    objs = []
    for k in (0.25, 0.5, 1.0, 2.0):
        sol = solve_bep1(ctx24, f, k * tn)
        if sol.constraint_active:
            assert np.linalg.norm(sol.psi_c) == pytest.approx(k * tn, rel=1e-8)
        assert np.linalg.norm(sol.psi_c) <= k * tn * (1 + 1e-8)
        objs.append(sol.objective)
    assert all(a >= b - 1e-12 for a, b in zip(objs, objs[1:]))


def test_bep1_feasible_truth_bound(ctx24, pairs24, rng):
    p = pairs24[2]
    f = _noisy(p, 1e-3, rng)
    sol = solve_bep1(ctx24, f, 1.1 * np.linalg.norm(p.psi))
    assert sol.objective <= np.linalg.norm(p.phi - f) + 1e-14


def test_bep1_deterministic(ctx24, pairs24):
    p = pairs24[3]
    a = solve_bep1(ctx24, p.phi, 0.3)
    b = solve_bep1(ctx24, p.phi, 0.3)
    assert np.array_equal(a.phi_c, b.phi_c)


def test_bep1_bad_bound(ctx24, pairs24):
    with pytest.raises(InvalidArgument):
        solve_bep1(ctx24, pairs24[0].phi, 0.0)


def test_bep1_output_pair_lies_on_graph(ctx24, pairs24):
    sol = solve_bep1(ctx24, pairs24[4].phi, 0.2)
    assert np.linalg.norm(t_operator(ctx24)(sol.phi_c) - sol.psi_c) <= 1e-10 * max(1.0, np.linalg.norm(sol.psi_c))
    assert abs(sol.phi_c[0]) <= 1e-14


def test_bep2_system_shapes(ctx24):
    sys = bep2_system(ctx24)
    assert sys.M.shape[0] == sys.Q.shape[1]
    assert sys.A.shape[0] == ncoeffs(16)
    assert sys.B.shape == (ncoeffs(24), sys.M.shape[1])


@pytest.mark.parametrize("mode", [(1, 0), (2, 1), (3, -2)])
def test_bep2_normal_equations_and_saturation(ctx24, mode):
    e = _unit(*mode)
    prev = np.inf
    for c in (1.0, 10.0, 100.0, 1000.0, 10000.0):
        sol = solve_bep2(ctx24, e, c)
        assert sol.residual <= prev * (1 + 1e-12)
        prev = sol.residual
        if sol.saturated:
            assert sol.gamma < 0
            assert np.linalg.norm(sol.h_c) == pytest.approx(c, rel=1e-8)
            assert sol.normal_eq_residual <= 1e-10


def test_bep2_zero_target(ctx24):
    sol = solve_bep2(ctx24, np.zeros(ncoeffs(24)), 1.0)
    assert sol.residual == 0.0 and not sol.saturated and not np.any(sol.h_c)


def test_bep2_bad_bound(ctx24):
    with pytest.raises(InvalidArgument):
        solve_bep2(ctx24, _unit(1, 0), -1.0)


def test_mode_estimate_within_bound(ctx24, pairs24, rng):
    for p in pairs24[:5]:
        f = _noisy(p, 1e-3, rng)
        for mode in ((1, 0), (2, 1)):
            e = _unit(*mode)
            est = estimate_mode(ctx24, f, e, 100.0, 1e-3, 1.0, np.linalg.norm(p.psi))
            assert abs(est.estimate - p.psi @ e) <= est.bound


def test_mode_estimate_rejects_negative_priors(ctx24, pairs24):
    with pytest.raises(InvalidArgument):
        estimate_mode(ctx24, pairs24[0].phi, _unit(1, 0), 1.0, -1.0, 1.0, 1.0)


def test_bep3_adjoint_constraint(ctx24):
    e = _unit(2, 0)
    Ts = adjoint_t(ctx24)
    for c in (1e-3, 1e-1, 10.0):
        sol = solve_bep3_adjoint(ctx24, e, c)
        n = np.linalg.norm(Ts(sol.psi_c))
        if sol.constraint_active:
            assert n == pytest.approx(c, rel=1e-8)
        else:
            assert n <= c
        assert sol.J == pytest.approx(np.linalg.norm(sol.psi_c - e), rel=1e-10, abs=1e-15)


@given(st.floats(1e-4, 1e2))
@settings(max_examples=10, deadline=None)
def test_bep3_J_decreases_in_c(c):
    from sphardy.locality import build_context

    ctx = build_context(np.pi / 3, 12, 8)
    e = np.zeros(ncoeffs(12))
    e[index(1, 1)] = 1.0
    assert solve_bep3_adjoint(ctx, e, 2 * c).J <= solve_bep3_adjoint(ctx, e, c).J + 1e-14


def test_weak_bound_holds(ctx24, pairs24, rng):
    p = pairs24[5]
    f = _noisy(p, 1e-3, rng)
    c = 1.1 * np.linalg.norm(p.psi)
    wb = weak_convergence_bound(ctx24, f, p.phi, _unit(1, 0), c, [0.0, 0.01, 0.1, 1, 10, 100])
    assert wb.lhs <= wb.bound


def test_weak_bound_zero_mode(ctx24, pairs24):
    wb = weak_convergence_bound(ctx24, pairs24[0].phi, pairs24[0].phi, np.zeros(625), 1.0, [1.0])
    assert wb.bound == 0.0 and wb.lhs == 0.0


def test_weak_bound_grid_checks(ctx24, pairs24):
    p = pairs24[0]
    with pytest.raises(InvalidArgument):
        weak_convergence_bound(ctx24, p.phi, p.phi, _unit(1, 0), 1.0, [])
    with pytest.raises(InvalidArgument):
        weak_convergence_bound(ctx24, p.phi, p.phi, _unit(1, 0), 1.0, [-1.0])


def test_report_round_trip(tmp_path):
    x = 0.1 + 0.2
    write_report(tmp_path / "r.csv", [{"case": "a", "c": x, "saturated": True}])
    with open(tmp_path / "r.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == REPORT_FIELDS
    assert float(rows[0]["c"]) == x and rows[0]["saturated"] == "1"

from __future__ import annotations

import json

import numpy as np
import pytest

from sphardy.continuation import (
    GraphPair,
    adjoint_t,
    apply_t_minus_to_plus,
    apply_t_plus_to_minus,
    domain_dimension_table,
    generate_pair,
    graph_basis,
    minus_domain_projector,
    plus_domain_projector,
    project_pair,
    t_inverse_operator,
    t_operator,
)
from sphardy.errors import InvalidArgument, NotInDomain
from sphardy.harmonics import ScalarCoeffs, ncoeffs


def test_pair_invariants(ctx24, pairs24):
    for p in pairs24:
        assert p.phi[0] == 0.0
        assert np.linalg.norm(p.phi) == pytest.approx(1.0, rel=1e-14)
        assert np.array_equal(p.psi, p.g - p.phi)
        assert p.locality_residual <= 1e-8
        assert p.divfree_residual <= ctx24.eps * ctx24.sigma_max * np.linalg.norm(p.g)
        assert not p.mean_fallback


def test_pair_deterministic(ctx24):
    a, b = generate_pair(ctx24, 7), generate_pair(ctx24, 7)
    assert np.array_equal(a.phi, b.phi) and np.array_equal(a.g, b.g)
    assert not np.array_equal(a.phi, generate_pair(ctx24, 8).phi)


def test_pair_json(ctx24, pairs24):
    p = pairs24[0]
    d = json.loads(p.to_json())
    assert d["nmax"] == 24
    q = GraphPair.from_json(p.to_json())
    assert np.array_equal(q.phi, p.phi) and q.locality_residual == p.locality_residual


def test_pair_rejects_negative_tail(ctx24):
    with pytest.raises(InvalidArgument):
        generate_pair(ctx24, 0, tail_amplitude=-1.0)


def test_witness_recovers_pairs(ctx24, pairs24):
    for p in pairs24:
        fwd = apply_t_plus_to_minus(ctx24, p.phi)
        assert np.linalg.norm(fwd.output - p.psi) <= 1e-7 * np.linalg.norm(p.psi)
        back = apply_t_minus_to_plus(ctx24, fwd.output)
        assert np.linalg.norm(back.output - p.phi) <= 1e-8


def test_graph_operator_matches_pairs(ctx24, pairs24):
    T = t_operator(ctx24)
    Tinv = t_inverse_operator(ctx24)
    for p in pairs24:
        assert np.linalg.norm(T(p.phi) - p.psi) <= 1e-10 * np.linalg.norm(p.psi)
        assert np.linalg.norm(Tinv(T(p.phi)) - p.phi) <= 1e-10


def test_zero_maps_to_zero(ctx24):
    z = np.zeros(ncoeffs(24))
    assert not np.any(apply_t_plus_to_minus(ctx24, z).output)
    assert not np.any(apply_t_minus_to_plus(ctx24, z).output)


def test_scalar_coeffs_accepted(ctx24, pairs24):
    p = pairs24[0]
    out = apply_t_plus_to_minus(ctx24, ScalarCoeffs(24, p.phi)).output
    assert np.allclose(out, apply_t_plus_to_minus(ctx24, p.phi).output)


def test_random_phi_not_in_domain(ctx24, rng):
    phi = rng.standard_normal(ncoeffs(24))
    phi[0] = 0.0
    with pytest.raises(NotInDomain) as info:
        apply_t_plus_to_minus(ctx24, phi)
    assert info.value.residual > 1e-6


def test_constant_psi_not_in_minus_domain(ctx24):
    psi = np.zeros(ncoeffs(24))
    psi[0] = 1.0
    with pytest.raises(NotInDomain):
        apply_t_minus_to_plus(ctx24, psi)


def test_mean_and_shape_checks(ctx24):
    phi = np.zeros(ncoeffs(24))
    phi[0] = 1.0
    with pytest.raises(InvalidArgument):
        apply_t_plus_to_minus(ctx24, phi)
    with pytest.raises(InvalidArgument):
        apply_t_plus_to_minus(ctx24, np.zeros(5))


def test_graph_basis_structure(ctx24):
    gb = graph_basis(ctx24)
    assert gb.columns.T @ gb.columns == pytest.approx(np.eye(gb.dim), abs=1e-12)
    assert np.allclose(gb.cos**2 + gb.sin**2, 1.0, atol=1e-12)
    assert np.max(np.abs(gb.W1[0])) <= 1e-14
    assert gb.residual <= 1e-8
    assert gb.as_subspace().dim == gb.dim


def test_adjoint_identity(ctx24, rng):
    T, Ts = t_operator(ctx24), adjoint_t(ctx24)
    x = plus_domain_projector(ctx24) @ rng.standard_normal(ncoeffs(24))
    y = minus_domain_projector(ctx24) @ rng.standard_normal(ncoeffs(24))
    assert T(x) @ y == pytest.approx(x @ Ts(y), rel=1e-10)
    # T* (T^-1)^T is the projector onto the plus domain
    Tinv = t_inverse_operator(ctx24)
    assert np.max(np.abs(Ts.matrix @ Tinv.matrix.T - plus_domain_projector(ctx24))) <= 1e-8


def test_project_pair_idempotent(ctx24, pairs24, rng):
    p = pairs24[3]
    a, b = project_pair(ctx24, p.phi, p.psi)
    assert np.linalg.norm(a - p.phi) <= 1e-10 and np.linalg.norm(b - p.psi) <= 1e-10
    x, y = project_pair(ctx24, rng.standard_normal(625), rng.standard_normal(625))
    x2, y2 = project_pair(ctx24, x, y)
    assert np.allclose(x, x2, atol=1e-12) and np.allclose(y, y2, atol=1e-12)


def test_domain_dimension_table():
    rows = domain_dimension_table(np.pi / 3, [8, 12])
    assert [r["ntrial"] for r in rows] == [8, 12]
    for r in rows:
        assert r["dim_graph"] == r["dim_D_eps"] + r["dim_T_off"] - 1

from __future__ import annotations

import warnings

import numpy as np
import pytest

from sphardy.errors import InvalidArgument, PreconditionViolation
from sphardy.grid import Cap, build_grid, cap_mask
from sphardy.harmonics import grid_harmonics, ncoeffs
from sphardy.locality import (
    build_context,
    bump_spillover,
    cap_bump,
    cap_gram,
    off_sigma_subspace,
    orthocomplement_check,
    sharmonic_subspace,
    svd_report,
    trace_spectrum,
)

THETA_C = np.pi / 3


def test_cap_gram_against_fine_grid():
    N = 6
    G = cap_gram(N, THETA_C)
    # brute force: a very fine product grid restricted to the cap
    g = build_grid(800, 2 * N + 1)
    Y = grid_harmonics(g, N)
    w = g.weights * cap_mask(g, Cap(THETA_C))
    brute = Y.T @ (w[:, None] * Y)
    assert np.max(np.abs(G - brute)) <= 5e-3  # indicator sum is first order
    assert np.max(np.abs(G - cap_gram(N, THETA_C, n_nodes=3 * N + 10))) <= 1e-13


def test_cap_gram_whole_sphere_limit():
    G = cap_gram(5, np.pi - 1e-12)
    assert np.max(np.abs(G - np.eye(ncoeffs(5)))) <= 1e-10


def test_cap_gram_psd_and_symmetric():
    G = cap_gram(12, THETA_C)
    assert np.max(np.abs(G - G.T)) <= 1e-15
    assert np.linalg.eigvalsh(G).min() >= -1e-13


def test_build_context_defaults_and_checks():
    ctx = build_context(THETA_C, 24)
    assert ctx.n_test == 16
    for bad in ((THETA_C, 0), (THETA_C, 4, 5)):
        with pytest.raises(InvalidArgument):
            build_context(*bad)
    with pytest.raises(InvalidArgument):
        build_context(THETA_C, 8, 4, eps=0.0)
    with pytest.raises(InvalidArgument):
        build_context(0.0, 8)


def test_sharmonic_subspace_properties(ctx24):
    D = sharmonic_subspace(ctx24)
    assert D.dim == 92
    assert D.orthonormality_error() <= 1e-12
    assert D.columns[0, 0] == 1.0
    assert D.residual <= ctx24.eps * ctx24.sigma_max
    D0 = sharmonic_subspace(ctx24, include_constant=False)
    assert D0.dim == D.dim - 1
    assert np.max(np.abs(D0.columns[0])) == 0.0


def test_sharmonic_subspace_cached(ctx24):
    assert sharmonic_subspace(ctx24) is sharmonic_subspace(ctx24)


def test_sharmonic_only_constants_warns():
    ctx = build_context(THETA_C, 3, 2, eps=1e-6)
    with pytest.warns(RuntimeWarning):
        D = sharmonic_subspace(ctx)
    assert D.dim == 1


def test_off_sigma_subspace(ctx24):
    T = off_sigma_subspace(ctx24)
    assert T.dim == ncoeffs(24) - ncoeffs(16)
    assert T.orthonormality_error() <= 1e-12
    assert T.residual <= 1e-12


def test_off_sigma_requires_smaller_test_space():
    with pytest.raises(PreconditionViolation):
        off_sigma_subspace(build_context(THETA_C, 6, 6))


def test_d_eps_members_have_small_weak_laplacian(ctx24, rng):
    D = sharmonic_subspace(ctx24)
    u = D.columns @ rng.standard_normal(D.dim)
    A = ctx24.weak_laplacian
    assert np.linalg.norm(A @ u) <= ctx24.eps * ctx24.sigma_max * np.linalg.norm(u)


def test_orthocomplement_contrast(ctx24, rng):
    bump = cap_bump(ctx24)
    assert bump_spillover(ctx24, bump) <= 1e-5
    D = sharmonic_subspace(ctx24)
    P = np.eye(ctx24.n_trial_coeffs) - D.columns @ D.columns.T
    q = np.linalg.norm(ctx24.lam["K+"] * ctx24.lam["K-"] / ctx24.lam["S"] * bump)
    inside, outside = [], []
    for _ in range(50):
        f = D.columns @ rng.standard_normal(D.dim)
        inside.append(orthocomplement_check(ctx24, f / np.linalg.norm(f), bump) / q)
        g = P @ rng.standard_normal(ctx24.n_trial_coeffs)
        outside.append(orthocomplement_check(ctx24, g / np.linalg.norm(g), bump) / q)
    assert max(inside) <= 1e-4
    assert np.median(outside) >= 1e-3


def test_trace_spectrum_decreases_with_degree():
    s = [trace_spectrum(build_context(THETA_C, n), "K+").min() for n in (8, 16, 24)]
    assert s[0] > s[1] > s[2]
    assert s[0] / s[2] >= 100


def test_trace_spectrum_bad_name(ctx12):
    with pytest.raises(InvalidArgument):
        trace_spectrum(ctx12, "S")


def test_svd_report_rows(ctx12):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rows = svd_report(ctx12)
    ops = {r["operator"] for r in rows}
    assert ops == {"A", "P(K+1/2)|D_eps", "P(K-1/2)|D_eps0"}
    assert all(r["sigma"] >= 0 for r in rows)
    a = [r["sigma"] for r in rows if r["operator"] == "A"]
    assert a == sorted(a, reverse=True)


def test_off_sigma_vectors_live_off_the_cap(rng):
    ctx = build_context(THETA_C, 16, 10)
    T = off_sigma_subspace(ctx)
    assert T.dim == 168
    for _ in range(50):
        t = T.columns @ rng.standard_normal(T.dim)
        assert 1.0 - t @ ctx.gram_tt @ t / (t @ t) >= 0.9


def test_constant_orthocomplement_residual(ctx24):
    c = np.zeros(ctx24.n_trial_coeffs)
    c[0] = 1.0
    assert orthocomplement_check(ctx24, c, cap_bump(ctx24)) <= 1e-12


def test_traces_injective_on_d_eps(ctx24):
    for which in ("K+", "K-"):
        s = trace_spectrum(ctx24, which)
        assert s.min() > 100 * np.finfo(float).eps * s.max()

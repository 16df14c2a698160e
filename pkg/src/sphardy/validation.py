"""Invariant suite behind ``sphardy validate``.

Each check yields one row ``check, value, tolerance, pass``. The suite is
deliberately independent of the stored closed forms: multipliers are compared
with radial oracles, the operator identity is checked per degree, and the
Hardy structure is checked by grid quadrature of synthesized fields.
"""

from __future__ import annotations

import numpy as np

from .grid import FOUR_PI, build_grid
from .hardy import VectorFieldCoeffs, apply_bminus, apply_bplus, decompose, synthesize
from .harmonics import grid_harmonics, ncoeffs
from .locality import cap_gram
from .potentials import derive_multipliers, identity_residuals, radial_oracle

ORACLE_DEGREE = 8


def _row(check: str, value: float, tol: float, ok: bool | None = None) -> dict:
    value = float(value)
    return {"check": check, "value": value, "tolerance": float(tol), "pass": bool(value <= tol) if ok is None else ok}


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def multiplier_rows(nmax: int, corrupt=None) -> list[dict]:
    ms = derive_multipliers(nmax, corrupt)
    rows = []
    worst = {"S": 0.0, "K+1/2": 0.0, "K-1/2": 0.0}
    for n in range(min(nmax, ORACLE_DEGREE) + 1):
        s_in, d_in = radial_oracle(n, "inner")
        s_out, d_out = radial_oracle(n, "outer")
        worst["S"] = max(worst["S"], _rel(ms.S.values[n], s_in), _rel(ms.S.values[n], s_out))
        worst["K-1/2"] = max(worst["K-1/2"], abs(ms.K_minus.values[n] - d_in) / max(abs(d_in), 1.0))
        worst["K+1/2"] = max(worst["K+1/2"], _rel(ms.K_plus.values[n], d_out))
    for name, v in worst.items():
        rows.append(_row(f"oracle_agreement_{name}", v, 1e-6))
    rows.append(_row("identity_residual", identity_residuals(ms).max(), 1e-12))
    rows.append(_row("constant_K-1/2", abs(ms.K_minus.values[0]), 1e-12))
    rows.append(_row("constant_K+1/2", abs(ms.K_plus.values[0] - 1.0), 1e-12))
    rows.append(_row("constant_S", abs(ms.S.values[0] + 1.0), 1e-12))
    lam = ms.S.values
    ok = bool(np.all(lam < 0) and np.all(np.diff(np.abs(lam)) < 0))
    rows.append(_row("S_negative_decreasing", 0.0 if ok else 1.0, 0.0, ok))
    return rows


def run_validation(nmax: int, theta_c: float, seed: int = 0, corrupt=None, n_theta: int = 0, n_phi: int = 0) -> list[dict]:
    rows = multiplier_rows(nmax, corrupt)
    grid = build_grid(n_theta or nmax + 2, n_phi or 2 * nmax + 2)
    rows.append(_row("grid_weight_sum", abs(grid.weights.sum() - FOUR_PI) / FOUR_PI, 1e-12))
    Y = grid_harmonics(grid, min(nmax, grid.exact_degree()))
    gram = Y.T @ (grid.weights[:, None] * Y)
    rows.append(_row("grid_orthonormality", np.max(np.abs(gram - np.eye(gram.shape[0]))), 1e-12))

    rng = np.random.default_rng(seed)
    N = min(nmax, 16)
    hgrid = build_grid(N + 2, 2 * N + 2)
    k = ncoeffs(N)
    worst = 0.0
    for _ in range(20):
        phi = rng.standard_normal(k)
        phi[0] = 0.0
        psi = rng.standard_normal(k)
        fp = synthesize(apply_bplus(phi), hgrid)
        fm = synthesize(apply_bminus(psi), hgrid)
        ip = hgrid.integrate(np.einsum("kc,kc->k", fp, fm))
        worst = max(worst, abs(ip) / (np.linalg.norm(phi) * np.linalg.norm(psi) or 1.0))
    rows.append(_row("hardy_orthogonality", worst, 1e-10))

    chi = rng.standard_normal(k)
    chi[0] = 0.0
    phi = rng.standard_normal(k)
    phi[0] = 0.0
    c = VectorFieldCoeffs(N, phi, rng.standard_normal(k), chi)
    F = synthesize(c, hgrid)
    d = decompose(F, hgrid, N)
    err = max(np.max(np.abs(d.phi - c.phi)), np.max(np.abs(d.psi - c.psi)), np.max(np.abs(d.chi - c.chi)))
    rows.append(_row("decompose_roundtrip", err, 1e-10))
    total = hgrid.integrate(np.einsum("kc,kc->k", F, F))
    parts = [synthesize(VectorFieldCoeffs(N, *v), hgrid) for v in ((phi, 0 * phi, 0 * phi), (0 * phi, c.psi, 0 * phi), (0 * phi, 0 * phi, chi))]
    split = sum(hgrid.integrate(np.einsum("kc,kc->k", p, p)) for p in parts)
    rows.append(_row("direct_sum_norm", abs(total - split) / max(total, 1e-300), 1e-10))

    g = cap_gram(nmax, theta_c)
    g_ref = cap_gram(nmax, theta_c, n_nodes=2 * nmax + 16)
    rows.append(_row("cap_gram_exactness", np.max(np.abs(g - g_ref)), 1e-13))
    return rows

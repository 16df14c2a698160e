"""Bounded extremal problems for the continuation operator.

BEP1   min ||phi - f||  over the discrete graph, subject to ||T phi|| <= c.
BEP2   min ||E e - E (K+1/2) P h||  over h in L^2(cap), subject to ||h|| <= c;
       its minimiser gives a bounded-error estimate of a mode of T phi.
BEP3   min ||psi - e||  subject to ||T* psi|| <= c  (adjoint side).

Every problem reduces to a diagonal Tikhonov family in a fixed orthonormal
basis, so the constraint norm is an explicit sum over singular components and
the multiplier is found by bracketed bisection followed by two Newton steps.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .continuation import graph_basis, t_operator
from .errors import InvalidArgument, NumericalFailure
from .locality import LocalityContext, _cache, sharmonic_subspace

BISECT_RTOL = 1e-12
MAX_DOUBLINGS = 200
RANGE_TOL = 1e-10
SLEPIAN_TOL = 1e-10


def _find_multiplier(norm_sq: Callable, dnorm_sq: Callable, target: float) -> tuple[float, list]:
    """Root of ``norm_sq(lam) = target^2`` for a decreasing ``norm_sq`` on ``lam > 0``.

    ``norm_sq(0) > target^2`` is assumed. The bracket is grown geometrically,
    bisected in ``log(lam)`` and polished with two guarded Newton steps.
    """
    t2 = target * target
    trace = []

    def val(lam):
        v = norm_sq(lam)
        trace.append((lam, v))
        return v

    lo, hi = 1.0, 1.0
    if val(1.0) > t2:
        for _ in range(MAX_DOUBLINGS):
            hi *= 2.0
            if val(hi) <= t2:
                break
        else:
            raise NumericalFailure("multiplier not bracketed after 200 doublings")
        lo = hi / 2.0
    else:
        for _ in range(MAX_DOUBLINGS):
            lo /= 2.0
            if val(lo) > t2:
                break
        else:
            raise NumericalFailure("multiplier not bracketed after 200 halvings")
        hi = lo * 2.0
    while (hi - lo) > BISECT_RTOL * hi:
        mid = np.sqrt(lo * hi)
        if mid <= lo or mid >= hi:
            break
        if val(mid) > t2:
            lo = mid
        else:
            hi = mid
    lam = 0.5 * (lo + hi)
    for _ in range(2):
        d = dnorm_sq(lam)
        if d == 0:
            break
        step = lam - (val(lam) - t2) / d
        if lo <= step <= hi:
            lam = step
    return lam, trace


# -- BEP1 ------------------------------------------------------------------


@dataclass(frozen=True)
class Bep1Solution:
    phi_c: np.ndarray
    psi_c: np.ndarray
    multiplier: float
    constraint_active: bool
    objective: float


def solve_bep1(ctx: LocalityContext, f, c: float) -> Bep1Solution:
    """Best approximation of ``f`` by a plus-potential whose continuation has norm ``<= c``.

    With graph coordinates ``y`` and ``W1 = U1 C V^T``, ``W2 = U2 S V^T``, the
    Lagrangian normal equations ``(W1^T W1 + lam W2^T W2) y = W1^T f`` are
    diagonal in ``V``: ``eta = C beta / (C^2 + lam S^2)`` with ``beta = U1^T f``.
    """
    if not c > 0:
        raise InvalidArgument(f"bound c must be > 0, got {c!r}")
    f = np.asarray(getattr(f, "values", f), dtype=float)
    gb = graph_basis(ctx)
    cs, sn = gb.cos, gb.sin
    beta = gb.U1.T @ f
    c2, s2 = cs * cs, sn * sn
    num = (sn * cs * beta) ** 2

    def eta(lam):
        return cs * beta / (c2 + lam * s2)

    def norm_sq(lam):
        return float(np.sum(num / (c2 + lam * s2) ** 2))

    def dnorm_sq(lam):
        return float(-2.0 * np.sum(num * s2 / (c2 + lam * s2) ** 3))

    lam = 0.0
    if norm_sq(0.0) > c * c:
        lam, _ = _find_multiplier(norm_sq, dnorm_sq, c)
    e = eta(lam)
    phi = gb.U1 @ (cs * e)
    psi = gb.U2 @ (sn * e)
    return Bep1Solution(phi, psi, lam, lam > 0, float(np.linalg.norm(phi - f)))


# -- BEP2 ------------------------------------------------------------------


@dataclass(frozen=True)
class Bep2System:
    """Dense ``M = E (K+1/2) P`` between orthonormal coordinates.

    ``Q`` spans ``D_eps`` (coordinates of ``E``). The cap space has orthonormal
    functions ``h_k = 1_cap sum_j A[j, k] Y_j`` built from the test harmonics
    (``A = U mu^-1/2`` from the eigenpairs of the test Gram matrix);
    ``B = G_ts A`` holds the trial coefficients of ``P h_k``.
    """

    Q: np.ndarray
    A: np.ndarray
    B: np.ndarray
    M: np.ndarray
    U: np.ndarray
    s: np.ndarray
    Vt: np.ndarray


def bep2_system(ctx: LocalityContext) -> Bep2System:
    cache = _cache(ctx)
    if "bep2" in cache:
        return cache["bep2"]
    Q = sharmonic_subspace(ctx).columns
    mu, U = np.linalg.eigh(ctx.gram_ss)
    keep = mu > SLEPIAN_TOL * mu[-1]
    A = U[:, keep] / np.sqrt(mu[keep])
    B = ctx.gram_st.T @ A
    M = Q.T @ (ctx.lam["K+"][:, None] * B)
    Um, s, Vt = np.linalg.svd(M, full_matrices=False)
    sys = Bep2System(Q, A, B, M, Um, s, Vt)
    cache["bep2"] = sys
    return sys


@dataclass(frozen=True)
class Bep2Solution:
    h_c: np.ndarray  # orthonormal cap-space coordinates
    h_test: np.ndarray  # test-harmonic coefficients of h on the cap
    h_trial: np.ndarray  # trial coefficients of P h
    gamma: float
    residual: float  # L_e(c)
    saturated: bool
    normal_eq_residual: float
    in_range: bool
    trace: list = field(default_factory=list, repr=False)


def solve_bep2(ctx: LocalityContext, e, c: float) -> Bep2Solution:
    """``h_c`` minimising ``||E e - M h||`` over ``||h|| <= c``.

    ``h(gamma) = sum sigma_i / (sigma_i^2 - gamma) <u_i, Ee> v_i``. If the
    pseudo-inverse solution fits within the bound it is returned with
    ``gamma = 0``; otherwise the unique ``gamma < 0`` with ``||h(gamma)|| = c``.
    """
    if not c > 0:
        raise InvalidArgument(f"bound c must be > 0, got {c!r}")
    e = np.asarray(getattr(e, "values", e), dtype=float)
    sys = bep2_system(ctx)
    q = sys.Q.T @ e
    r = sys.M.shape[1]
    if not np.any(q):
        z = np.zeros(r)
        return Bep2Solution(z, sys.A @ z, sys.B @ z, 0.0, 0.0, False, 0.0, True)
    rank = int(np.sum(sys.s > np.finfo(float).eps * max(sys.M.shape) * sys.s[0]))
    s = sys.s[:rank]
    U, Vt = sys.U[:, :rank], sys.Vt[:rank]
    beta = U.T @ q
    in_range = bool(np.linalg.norm(q - U @ beta) <= RANGE_TOL * np.linalg.norm(q))
    num = (s * beta) ** 2

    def coeffs(gamma):
        return s * beta / (s * s - gamma)

    h0 = coeffs(0.0)
    gamma, trace = 0.0, []
    if np.linalg.norm(h0) > c:
        # ||h(gamma)|| grows as gamma -> 0-; work with lam = -gamma > 0
        norm_sq = lambda lam: float(np.sum(num / (s * s + lam) ** 2))
        dnorm_sq = lambda lam: float(-2.0 * np.sum(num / (s * s + lam) ** 3))
        lam, tr = _find_multiplier(norm_sq, dnorm_sq, c)
        gamma = -lam
        trace = [(-x, np.sqrt(v)) for x, v in tr]
    hc = Vt.T @ coeffs(gamma)
    Mh = sys.M @ hc
    rhs = sys.M.T @ q
    ne = np.linalg.norm(sys.M.T @ Mh - gamma * hc - rhs) / max(np.linalg.norm(rhs), np.finfo(float).tiny)
    return Bep2Solution(
        hc, sys.A @ hc, sys.B @ hc, float(gamma), float(np.linalg.norm(q - Mh)), gamma < 0, float(ne), in_range, trace
    )


@dataclass(frozen=True)
class ModeEstimate:
    estimate: float
    bound: float
    residual: float
    gamma: float
    saturated: bool


def estimate_mode(
    ctx: LocalityContext,
    phi_noisy,
    e,
    c: float,
    eps_noise: float,
    norm_phi: float,
    norm_tphi: float,
) -> ModeEstimate:
    """Estimate ``<T phi, e>`` from noisy ``phi`` with a worst-case error bound.

    ``estimate = <P phi_noisy, h_c> - <phi_noisy, e>`` and
    ``bound = (norm_phi + norm_tphi) L_e(c) + eps_noise (c + ||e||)``.
    """
    if min(eps_noise, norm_phi, norm_tphi) < 0:
        raise InvalidArgument("priors must be nonnegative")
    phi_noisy = np.asarray(getattr(phi_noisy, "values", phi_noisy), dtype=float)
    e = np.asarray(getattr(e, "values", e), dtype=float)
    sol = solve_bep2(ctx, e, c)
    est = float(phi_noisy @ sol.h_trial - phi_noisy @ e)
    bound = (norm_phi + norm_tphi) * sol.residual + eps_noise * (c + float(np.linalg.norm(e)))
    return ModeEstimate(est, float(bound), sol.residual, sol.gamma, sol.saturated)


# -- BEP3 and the weak-convergence bound --------------------------------------


@dataclass(frozen=True)
class Bep3Solution:
    psi_c: np.ndarray
    multiplier: float
    constraint_active: bool
    J: float


def solve_bep3_adjoint(ctx: LocalityContext, e, c: float) -> Bep3Solution:
    """``psi_c`` minimising ``||psi - e||`` subject to ``||T* psi|| <= c``.

    ``T* = U1 diag(sin/cos) U2^T`` vanishes off the range of ``U2``, so only the
    components ``z = U2^T e`` are shrunk: ``z / (1 + lam r^2)``, ``r = sin/cos``.
    """
    if not c > 0:
        raise InvalidArgument(f"bound c must be > 0, got {c!r}")
    e = np.asarray(getattr(e, "values", e), dtype=float)
    gb = graph_basis(ctx)
    r2 = (gb.sin / gb.cos) ** 2
    z = gb.U2.T @ e
    num = r2 * z * z

    def norm_sq(lam):
        return float(np.sum(num / (1.0 + lam * r2) ** 2))

    def dnorm_sq(lam):
        return float(-2.0 * np.sum(num * r2 / (1.0 + lam * r2) ** 3))

    lam = 0.0
    if norm_sq(0.0) > c * c:
        lam, _ = _find_multiplier(norm_sq, dnorm_sq, c)
    shrink = lam * r2 / (1.0 + lam * r2)
    psi = e - gb.U2 @ (shrink * z)
    return Bep3Solution(psi, lam, lam > 0, float(np.linalg.norm(shrink * z)))


@dataclass(frozen=True)
class WeakBound:
    bound: float
    lhs: float
    c_tilde: float
    J: float


def weak_convergence_bound(ctx: LocalityContext, f_n, phi_true, e, c: float, c_grid) -> WeakBound:
    """``2 min_{c~} (c J_e(c~) + c~ ||f_n - phi_true||)`` and the error it bounds.

    ``lhs = |<T phi_{n,c} - T phi_true, e>|`` with ``phi_{n,c}`` from BEP1. The
    bound requires ``c >= ||T phi_true||``.
    """
    c_grid = np.asarray(list(c_grid), dtype=float)
    if c_grid.size == 0:
        raise InvalidArgument("c_grid must not be empty")
    f_n = np.asarray(getattr(f_n, "values", f_n), dtype=float)
    phi_true = np.asarray(getattr(phi_true, "values", phi_true), dtype=float)
    e = np.asarray(getattr(e, "values", e), dtype=float)
    if not np.any(e):
        return WeakBound(0.0, 0.0, 0.0, 0.0)
    delta = float(np.linalg.norm(f_n - phi_true))
    best = (np.inf, np.nan, np.nan)
    for ct in c_grid:
        if ct < 0:
            raise InvalidArgument("c_grid entries must be >= 0")
        # c~ = 0 forces psi orthogonal to the range of T
        J = float(np.linalg.norm(graph_basis(ctx).U2.T @ e)) if ct == 0 else solve_bep3_adjoint(ctx, e, float(ct)).J
        val = 2.0 * (c * J + ct * delta)
        if val < best[0]:
            best = (val, float(ct), J)
    psi_c = solve_bep1(ctx, f_n, c).psi_c
    psi_true = t_operator(ctx)(phi_true)
    lhs = abs(float((psi_c - psi_true) @ e))
    return WeakBound(float(best[0]), lhs, best[1], best[2])


# -- reports ----------------------------------------------------------------

REPORT_FIELDS = ["case", "c", "gamma_or_lambda", "saturated", "objective", "residual", "bound", "empirical_error"]


def write_report(path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=REPORT_FIELDS)
        w.writeheader()
        for row in rows:
            w.writerow({k: _fmt(row.get(k, "")) for k in REPORT_FIELDS})


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return v

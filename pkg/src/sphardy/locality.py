"""Discrete locality on a polar cap.

Functions are expanded in trial harmonics up to ``n_trial``; conditions "on
the cap" are imposed weakly, by testing against harmonics up to
``n_test < n_trial``. The weak restriction of ``u`` is the moment vector
``gram_st @ u`` and its size is measured by the Euclidean norm of those
moments.

The cap Gram matrices are exact: each entry is a polynomial integral in
``cos(theta)`` evaluated with ``n_trial + 1`` Gauss nodes on
``[cos(theta_c), 1]``, and entries with different orders vanish identically.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import roots_legendre

from .errors import InvalidArgument, PreconditionViolation
from .grid import Cap
from .harmonics import degree_order, ncoeffs, normalized_legendre
from .potentials import multipliers


def cap_gram(nmax: int, theta_c: float, n_nodes: int | None = None) -> np.ndarray:
    """``<Y_i, Y_j>_{L^2(cap)}`` for all trial harmonics up to ``nmax``."""
    n_nodes = nmax + 1 if n_nodes is None else n_nodes
    x, w = roots_legendre(n_nodes)
    a = np.cos(theta_c)
    x = 0.5 * (x + 1.0) * (1.0 - a) + a
    w = 0.5 * w * (1.0 - a)
    p = normalized_legendre(nmax, x)
    n, m = degree_order(nmax)
    F = p[n, np.abs(m)]
    # the azimuthal integral of the trig factors is 2 pi delta_{m m'} after normalization
    G = 2.0 * np.pi * (F * w) @ F.T
    G[m[:, None] != m[None, :]] = 0.0
    return G


@dataclass(frozen=True)
class SubspaceBasis:
    """Orthonormal coefficient columns spanning a discrete subspace."""

    label: str
    columns: np.ndarray
    residual: float
    tolerance: float = np.inf
    singular_values: np.ndarray | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.columns.shape[1]

    def project(self, v: np.ndarray) -> np.ndarray:
        return self.columns @ (self.columns.T @ v)

    def orthonormality_error(self) -> float:
        Q = self.columns
        return float(np.max(np.abs(Q.T @ Q - np.eye(Q.shape[1])), initial=0.0))


@dataclass(frozen=True)
class LocalityContext:
    """Cap, trial/test degrees and the cached linear algebra built on them."""

    cap: Cap
    n_trial: int
    n_test: int
    eps: float

    @cached_property
    def gram_tt(self) -> np.ndarray:
        g = cap_gram(self.n_trial, self.cap.theta_c)
        g.setflags(write=False)
        return g

    @property
    def gram_st(self) -> np.ndarray:
        return self.gram_tt[: ncoeffs(self.n_test)]

    @property
    def gram_ss(self) -> np.ndarray:
        k = ncoeffs(self.n_test)
        return self.gram_tt[:k, :k]

    @property
    def n_trial_coeffs(self) -> int:
        return ncoeffs(self.n_trial)

    @property
    def n_test_coeffs(self) -> int:
        return ncoeffs(self.n_test)

    @cached_property
    def lam(self):
        """Per-coefficient multipliers at the trial degree."""
        ms = multipliers(self.n_trial)
        return {
            "S": ms.S.expand(),
            "K+": ms.K_plus.expand(),
            "K-": ms.K_minus.expand(),
            "lapS": ms.lap_S.expand(),
        }

    @cached_property
    def weak_laplacian(self) -> np.ndarray:
        """``A = G_st diag(Lap_S S)``, the weak restriction of ``Lap_S S`` to the cap."""
        return self.gram_st * self.lam["lapS"][None, :]

    @cached_property
    def _svd_a(self):
        # the constant column of A is identically zero; keep it out of the SVD
        _, s, vt = np.linalg.svd(self.weak_laplacian[:, 1:], full_matrices=True)
        return s, vt

    @cached_property
    def _svd_gst(self):
        _, s, vt = np.linalg.svd(self.gram_st, full_matrices=True)
        return s, vt

    @property
    def sigma_max(self) -> float:
        return float(self._svd_a[0][0])

    def weak_moments(self, u: np.ndarray) -> np.ndarray:
        return self.gram_st @ u

    def weak_norm(self, u: np.ndarray) -> float:
        return float(np.linalg.norm(self.gram_st @ u))


def build_context(cap: Cap | float, n_trial: int, n_test: int | None = None, eps: float = 1e-6) -> LocalityContext:
    if not isinstance(cap, Cap):
        cap = Cap(float(cap))
    if n_trial < 1:
        raise InvalidArgument("n_trial must be >= 1")
    n_test = (2 * n_trial) // 3 if n_test is None else n_test
    if not (0 <= n_test <= n_trial):
        raise InvalidArgument(f"need 0 <= n_test <= n_trial, got {n_test}, {n_trial}")
    if not (0.0 < eps < 1.0):
        raise InvalidArgument(f"eps must lie in (0, 1), got {eps!r}")
    return LocalityContext(cap, int(n_trial), int(n_test), float(eps))


def sharmonic_subspace(ctx: LocalityContext, include_constant: bool = True) -> SubspaceBasis:
    """Orthonormal basis of the near-null space ``D_eps``.

    The columns are the constant harmonic (annihilated exactly) and the right
    singular vectors of ``A`` restricted to non-constant coefficients whose
    singular value is ``<= eps * sigma_max``. Only singular directions are used:
    the structural null space of the wide matrix ``A`` (present whenever the
    trial space is larger than the test space) is excluded, because it carries
    no information about the cap and makes the traces non-injective on it.
    """
    key = ("D_eps", include_constant)
    cache = _cache(ctx)
    if key in cache:
        return cache[key]
    s, vt = ctx._svd_a
    nt = ctx.n_trial_coeffs
    keep = np.nonzero(s <= ctx.eps * s[0])[0]
    cols = []
    if include_constant:
        e0 = np.zeros(nt)
        e0[0] = 1.0
        cols.append(e0[:, None])
    near = np.zeros((nt, keep.size))
    near[1:] = vt[keep].T
    cols.append(near)
    Q = np.hstack(cols)
    A = ctx.weak_laplacian
    resid = float(np.max(np.linalg.norm(A @ Q, axis=0), initial=0.0))
    if Q.shape[1] <= 1:
        warnings.warn(
            f"D_eps contains only constants at eps={ctx.eps:g}; raise eps or n_trial",
            RuntimeWarning,
            stacklevel=2,
        )
    basis = SubspaceBasis("D_eps" if include_constant else "D_eps_0", Q, resid, ctx.eps * s[0], s)
    cache[key] = basis
    return basis


def off_sigma_subspace(ctx: LocalityContext) -> SubspaceBasis:
    """Trial functions whose moments against every test harmonic on the cap vanish."""
    cache = _cache(ctx)
    if "T_off" in cache:
        return cache["T_off"]
    if ctx.n_test >= ctx.n_trial:
        raise PreconditionViolation("no discrete freedom off the cap: n_test must be < n_trial")
    s, vt = ctx._svd_gst
    ns = ctx.n_test_coeffs
    T = vt[ns:].T.copy()
    resid = float(np.max(np.abs(ctx.gram_st @ T), initial=0.0))
    basis = SubspaceBasis("T_off", T, resid, 1e-12, s)
    cache["T_off"] = basis
    return basis


def _cache(ctx: LocalityContext) -> dict:
    # per-context memo for derived bases; lives in the instance dict
    d = ctx.__dict__.setdefault("_derived", {})
    return d


def cap_bump(ctx: LocalityContext, shrink: float = 0.9) -> np.ndarray:
    """Trial coefficients of a smooth bump supported in ``theta < shrink * theta_c``.

    The profile is ``exp(1 - 1/(1 - (theta/theta_b)^2))`` (``C^infinity``, compact
    support), projected onto the trial harmonics with an exact-enough product
    quadrature. Returns coefficients only; see :func:`bump_spillover`.
    """
    theta_b = shrink * ctx.cap.theta_c
    n_nodes = 4 * ctx.n_trial + 64
    x, w = roots_legendre(n_nodes)
    th = np.arccos(x)
    t = th / theta_b
    prof = np.zeros_like(t)
    inside = t < 1.0
    prof[inside] = np.exp(1.0 - 1.0 / (1.0 - t[inside] ** 2))
    p = normalized_legendre(ctx.n_trial, x)
    n, m = degree_order(ctx.n_trial)
    coeffs = np.zeros(ctx.n_trial_coeffs)
    zonal = m == 0
    # axisymmetric profile: only the zonal harmonics see it
    coeffs[zonal] = 2.0 * np.pi * (p[n[zonal], 0] * w) @ prof
    return coeffs


def bump_spillover(ctx: LocalityContext, coeffs: np.ndarray) -> float:
    """Fraction of the bandlimited bump's squared L^2 mass outside the cap."""
    total = float(coeffs @ coeffs)
    inside = float(coeffs @ ctx.gram_tt @ coeffs)
    return max(0.0, (total - inside) / total) if total > 0 else 0.0


def orthocomplement_check(ctx: LocalityContext, f: np.ndarray, bump: np.ndarray) -> float:
    """``|<f, (K+1/2)(K-1/2) S^-1 bump>|`` in trial coefficients."""
    lam = ctx.lam
    return float(abs(f @ (lam["K+"] * lam["K-"] / lam["S"] * bump)))


def trace_spectrum(ctx: LocalityContext, which: str = "K+") -> np.ndarray:
    """Singular values of the weak restriction of ``K +- 1/2`` on ``D_eps``.

    ``which='K+'`` uses all of ``D_eps``; ``'K-'`` the zero-mean part
    (``K - 1/2`` annihilates constants).
    """
    if which == "K+":
        Q = sharmonic_subspace(ctx).columns
    elif which == "K-":
        Q = sharmonic_subspace(ctx, include_constant=False).columns
    else:
        raise InvalidArgument(f"which must be 'K+' or 'K-', got {which!r}")
    if Q.shape[1] == 0:
        return np.zeros(0)
    M = ctx.gram_st @ (ctx.lam[which][:, None] * Q)
    return np.linalg.svd(M, compute_uv=False)


def svd_report(ctx: LocalityContext) -> list[dict]:
    """Rows ``ntrial, ntest, theta_c, operator, index, sigma`` for the three spectra."""
    rows = []
    spectra = [("A", ctx._svd_a[0]), ("P(K+1/2)|D_eps", trace_spectrum(ctx, "K+")), ("P(K-1/2)|D_eps0", trace_spectrum(ctx, "K-"))]
    for name, sv in spectra:
        for i, s in enumerate(sv):
            rows.append(
                {"ntrial": ctx.n_trial, "ntest": ctx.n_test, "theta_c": ctx.cap.theta_c, "operator": name, "index": i, "sigma": float(s)}
            )
    return rows


__all__ = [
    "LocalityContext",
    "SubspaceBasis",
    "build_context",
    "cap_gram",
    "sharmonic_subspace",
    "off_sigma_subspace",
    "orthocomplement_check",
    "cap_bump",
    "bump_spillover",
    "trace_spectrum",
    "svd_report",
]

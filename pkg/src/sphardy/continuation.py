"""Continuation between the two Hardy potentials of a field tangent and
divergence-free on the cap.

A plus-potential ``phi`` belongs to the discrete domain when its weak
restriction to the cap equals that of ``(K+1/2) g`` for a witness ``g`` in
``D_eps``; then ``T(phi) = g - phi``. The converse map uses the zero-mean
witness space and ``K-1/2``. Both are applied through small least-squares
problems on the witness basis, never by inverting the weak trace on the
whole trial space.

The graph of ``T`` is parametrised linearly by a witness ``g``, an off-cap
tail ``t`` and one mean correction; :func:`graph_basis` orthonormalises it
and factors its two blocks with a shared right basis (``W1 = U1 C V^T``,
``W2 = U2 S V^T``, ``C^2 + S^2 = I``). Bounded extremal problems and the
adjoint are solved in those coordinates.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument, NotInDomain, PreconditionViolation
from .harmonics import degrees
from .locality import (
    LocalityContext,
    SubspaceBasis,
    _cache,
    build_context,
    off_sigma_subspace,
    sharmonic_subspace,
)

MEMBERSHIP_TOL = 1e-6
MEAN_CARRIER_TOL = 1e-10


@dataclass(frozen=True)
class GraphPair:
    """``(phi, psi)`` in the graph of ``T`` with its witness ``g``."""

    nmax: int
    phi: np.ndarray
    psi: np.ndarray
    g: np.ndarray
    locality_residual: float
    divfree_residual: float
    mean_fallback: bool = False

    def to_json(self) -> str:
        return json.dumps(
            {
                "nmax": self.nmax,
                "basis": "real-orthonormal-sh",
                "layout": "n-major,m=-n..n",
                "phi": self.phi.tolist(),
                "psi": self.psi.tolist(),
                "g": self.g.tolist(),
                "locality_residual": self.locality_residual,
                "divfree_residual": self.divfree_residual,
                "mean_fallback": self.mean_fallback,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "GraphPair":
        d = json.loads(text)
        return cls(
            int(d["nmax"]),
            np.array(d["phi"], dtype=float),
            np.array(d["psi"], dtype=float),
            np.array(d["g"], dtype=float),
            float(d["locality_residual"]),
            float(d["divfree_residual"]),
            bool(d.get("mean_fallback", False)),
        )


@dataclass(frozen=True)
class WitnessSolve:
    output: np.ndarray
    witness: np.ndarray
    fit_residual: float
    condition: float


@dataclass(frozen=True)
class DenseOperator:
    """Linear map between trial coefficient spaces stored as a matrix."""

    matrix: np.ndarray
    domain: str
    codomain: str

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ np.asarray(x, dtype=float)

    @property
    def T(self) -> "DenseOperator":
        return DenseOperator(self.matrix.T, self.codomain, self.domain)


@dataclass(frozen=True)
class GraphBasis:
    """Orthonormal basis of the discrete graph with its block factorisation.

    ``columns`` stacks the phi block over the psi block. ``W1 = U1 diag(cos) V^T``
    and ``W2 = U2 diag(sin) V^T`` with orthonormal ``U1``, ``U2``, ``V``.
    """

    columns: np.ndarray
    U1: np.ndarray
    U2: np.ndarray
    V: np.ndarray
    cos: np.ndarray
    sin: np.ndarray
    residual: float = field(default=0.0)

    @property
    def dim(self) -> int:
        return self.columns.shape[1]

    @property
    def n_coeffs(self) -> int:
        return self.columns.shape[0] // 2

    @property
    def W1(self) -> np.ndarray:
        return self.columns[: self.n_coeffs]

    @property
    def W2(self) -> np.ndarray:
        return self.columns[self.n_coeffs :]

    def as_subspace(self) -> SubspaceBasis:
        return SubspaceBasis("graph", self.columns, self.residual)


# -- residuals --------------------------------------------------------------


def field_norm(ctx: LocalityContext, phi: np.ndarray, psi: np.ndarray) -> float:
    """``||B+ phi + B- psi||``; the two Hardy components are orthogonal."""
    lam = ctx.lam
    n = np.sqrt(np.maximum(_nn1(ctx), 0.0))
    plus = np.concatenate([lam["K-"] * phi, n * lam["S"] * phi])
    minus = np.concatenate([lam["K+"] * psi, n * lam["S"] * psi])
    return float(np.sqrt(plus @ plus + minus @ minus))


def _nn1(ctx: LocalityContext) -> np.ndarray:
    d = degrees(ctx.n_trial).astype(float)
    return d * (d + 1.0)


def locality_residual(ctx: LocalityContext, phi: np.ndarray, psi: np.ndarray) -> float:
    """Weak size on the cap of the normal component of ``B+ phi + B- psi``, relative."""
    lam = ctx.lam
    normal = lam["K-"] * phi + lam["K+"] * psi
    scale = field_norm(ctx, phi, psi)
    return ctx.weak_norm(normal) / scale if scale > 0 else 0.0


def divfree_residual(ctx: LocalityContext, g: np.ndarray) -> float:
    """Weak size on the cap of the surface divergence ``Lap_S S g``."""
    return float(np.linalg.norm(ctx.weak_laplacian @ g))


# -- witness systems ----------------------------------------------------------


def _witness_system(ctx: LocalityContext, which: str):
    cache = _cache(ctx)
    key = ("witness", which)
    if key not in cache:
        if which == "+":
            Q = sharmonic_subspace(ctx).columns
            M = ctx.gram_st @ (ctx.lam["K+"][:, None] * Q)
        else:
            Q = sharmonic_subspace(ctx, include_constant=False).columns
            M = ctx.gram_st @ (ctx.lam["K-"][:, None] * Q)
        if Q.shape[1] == 0:
            raise PreconditionViolation("D_eps is empty beyond constants; raise eps or n_trial")
        U, s, Vt = np.linalg.svd(M, full_matrices=False)
        rank = int(np.sum(s > np.finfo(float).eps * max(M.shape) * s[0]))
        cache[key] = (Q, U[:, :rank], s[:rank], Vt[:rank])
    return cache[key]


def _solve_witness(ctx: LocalityContext, which: str, rhs_moments: np.ndarray):
    Q, U, s, Vt = _witness_system(ctx, which)
    beta = U.T @ rhs_moments
    c = Vt.T @ (beta / s)
    resid = float(np.linalg.norm(rhs_moments - U @ beta))
    return Q @ c, resid, float(s[0] / s[-1])


def _vec(x, ctx: LocalityContext) -> np.ndarray:
    v = np.asarray(getattr(x, "values", x), dtype=float)
    if v.shape != (ctx.n_trial_coeffs,):
        raise InvalidArgument(f"expected {ctx.n_trial_coeffs} trial coefficients, got {v.shape}")
    return v


def apply_t_plus_to_minus(ctx: LocalityContext, phi, tol: float = MEMBERSHIP_TOL) -> WitnessSolve:
    """``T(phi) = [P(K+1/2)]^-1 P phi - phi`` through the witness least squares."""
    phi = _vec(phi, ctx)
    nrm = float(np.linalg.norm(phi))
    if abs(phi[0]) > 1e-14 * max(1.0, nrm):
        raise InvalidArgument(f"phi must have zero mean, mean coefficient is {phi[0]!r}")
    g, resid, cond = _solve_witness(ctx, "+", ctx.weak_moments(phi))
    if resid > tol * nrm:
        raise NotInDomain(f"phi is not in the discrete plus-domain (fit residual {resid:.3e})", resid)
    return WitnessSolve(g - phi, g, resid, cond)


def apply_t_minus_to_plus(ctx: LocalityContext, psi, tol: float = MEMBERSHIP_TOL) -> WitnessSolve:
    """``T^-1(psi) = -[P(K-1/2)]^-1 P psi - psi``, mean removed."""
    psi = _vec(psi, ctx)
    nrm = float(np.linalg.norm(psi))
    gt, resid, cond = _solve_witness(ctx, "-", ctx.weak_moments(psi))
    if resid > tol * nrm:
        raise NotInDomain(f"psi is not in the discrete minus-domain (fit residual {resid:.3e})", resid)
    phi = -gt - psi
    # the <psi, 1> correction: the output lives in L^2 modulo constants
    phi[0] = 0.0
    return WitnessSolve(phi, gt, resid, cond)


# -- generator ----------------------------------------------------------------


def _mean_carrier(ctx: LocalityContext):
    T = off_sigma_subspace(ctx).columns
    t1 = T @ T[0]
    nrm = np.linalg.norm(t1)
    if nrm == 0 or abs(t1[0] / nrm) <= MEAN_CARRIER_TOL:
        return None
    return t1 / nrm


def generate_pair(ctx: LocalityContext, seed=0, tail_amplitude: float = 0.5) -> GraphPair:
    """Draw a pair from the graph of ``T`` with a known witness.

    ``g`` is a random element of ``D_eps``; ``phi = (K+1/2) g + t`` with a random
    off-cap tail ``t`` of relative size ``tail_amplitude``, then the mean is
    removed along a mean-carrying off-cap direction. ``psi = g - phi``. The pair
    is scaled so that ``||phi|| = 1``.
    """
    if tail_amplitude < 0:
        raise InvalidArgument("tail_amplitude must be >= 0")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    Q = sharmonic_subspace(ctx).columns
    if Q.shape[1] <= 1:
        raise PreconditionViolation("D_eps contains only constants; raise eps or n_trial")
    T = off_sigma_subspace(ctx).columns
    g = Q @ rng.standard_normal(Q.shape[1])
    base = ctx.lam["K+"] * g
    tail = T @ rng.standard_normal(T.shape[1])
    tail *= tail_amplitude * np.linalg.norm(base) / np.linalg.norm(tail)
    phi = base + tail
    t1 = _mean_carrier(ctx)
    fallback = t1 is None
    if fallback:
        phi[0] = 0.0
    else:
        phi -= (phi[0] / t1[0]) * t1
        phi[0] = 0.0  # exact zero rather than a rounding residue
    scale = 1.0 / np.linalg.norm(phi)
    phi, g = phi * scale, g * scale
    psi = g - phi
    return GraphPair(
        ctx.n_trial,
        phi,
        psi,
        g,
        locality_residual(ctx, phi, psi),
        divfree_residual(ctx, g),
        fallback,
    )


# -- graph ----------------------------------------------------------------


def graph_basis(ctx: LocalityContext) -> GraphBasis:
    """Orthonormal basis of ``{(phi, g - phi)}`` and its block factorisation."""
    cache = _cache(ctx)
    if "graph" in cache:
        return cache["graph"]
    Q = sharmonic_subspace(ctx).columns
    T = off_sigma_subspace(ctx).columns
    lp = ctx.lam["K+"][:, None]
    F = np.hstack([lp * Q, T])  # phi as a function of (g, t)
    H = np.hstack([Q - lp * Q, -T])  # psi = g - phi
    # parameters keeping phi at zero mean
    _, _, vt = np.linalg.svd(F[:1])
    N = vt[1:].T
    stacked = np.vstack([F @ N, H @ N])
    W, _ = np.linalg.qr(stacked)
    nt = ctx.n_trial_coeffs
    W1, W2 = W[:nt], W[nt:]
    U1, cos, Vt = np.linalg.svd(W1, full_matrices=False)
    V = Vt.T
    B = W2 @ V
    sin = np.linalg.norm(B, axis=0)
    if np.min(cos) <= 0 or np.min(sin) <= 0:
        raise PreconditionViolation("graph blocks are rank deficient; the discrete T is not injective here")
    U2 = B / sin
    resid = max(
        float(np.max(np.abs(W1[0]))),
        max(locality_residual(ctx, W1[:, k], W2[:, k]) for k in range(0, W.shape[1], max(1, W.shape[1] // 25))),
    )
    basis = GraphBasis(W, U1, U2, V, cos, sin, resid)
    cache["graph"] = basis
    return basis


def t_operator(ctx: LocalityContext) -> DenseOperator:
    """``T`` on the discrete plus-domain, ``U2 S C^-1 U1^T``."""
    gb = graph_basis(ctx)
    return DenseOperator((gb.U2 * (gb.sin / gb.cos)) @ gb.U1.T, "phi", "psi")


def t_inverse_operator(ctx: LocalityContext) -> DenseOperator:
    gb = graph_basis(ctx)
    return DenseOperator((gb.U1 * (gb.cos / gb.sin)) @ gb.U2.T, "psi", "phi")


def adjoint_t(ctx: LocalityContext) -> DenseOperator:
    """``T*``: the transpose of :func:`t_operator`, mapping minus- to plus-coefficients."""
    return t_operator(ctx).T


def plus_domain_projector(ctx: LocalityContext) -> np.ndarray:
    U1 = graph_basis(ctx).U1
    return U1 @ U1.T


def minus_domain_projector(ctx: LocalityContext) -> np.ndarray:
    U2 = graph_basis(ctx).U2
    return U2 @ U2.T


def project_pair(ctx: LocalityContext, phi: np.ndarray, psi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthogonal projection of ``(phi, psi)`` onto the graph."""
    W = graph_basis(ctx).columns
    x = W @ (W.T @ np.concatenate([phi, psi]))
    n = ctx.n_trial_coeffs
    return x[:n], x[n:]


def domain_dimension_table(theta_c: float, n_trials, eps: float = 1e-6) -> list[dict]:
    """Discrete plus-domain dimension as the trial degree grows."""
    rows = []
    for nt in n_trials:
        ctx = build_context(theta_c, nt, eps=eps)
        rows.append(
            {
                "ntrial": nt,
                "ntest": ctx.n_test,
                "dim_D_eps": sharmonic_subspace(ctx).dim,
                "dim_T_off": off_sigma_subspace(ctx).dim,
                "dim_graph": graph_basis(ctx).dim,
            }
        )
    return rows

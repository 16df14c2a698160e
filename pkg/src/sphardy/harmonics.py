"""Real orthonormal spherical harmonics and transforms.

Convention (no Condon-Shortley phase)::

    Y_{n,0}  = Pbar_n^0(cos t)
    Y_{n,m}  = sqrt(2) Pbar_n^m(cos t) cos(m p)      m > 0
    Y_{n,-m} = sqrt(2) Pbar_n^m(cos t) sin(m p)      m > 0

    Pbar_n^m = sqrt((2n+1)/(4 pi) * (n-m)!/(n+m)!) P_n^m,   P_n^m >= 0 near the north pole

so that ``int_S Y_{n,m} Y_{n',m'} dw = delta``. Coefficients are stored
n-major with ``m = -n..n``; flat index ``n*n + n + m``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import InvalidArgument, PreconditionViolation
from .grid import SphereGrid, local_frame

BASIS_NAME = "real-orthonormal-sh"
LAYOUT_NAME = "n-major,m=-n..n"


def ncoeffs(nmax: int) -> int:
    return (nmax + 1) ** 2


def index(n: int, m: int) -> int:
    if abs(m) > n:
        raise InvalidArgument(f"|m| > n for (n, m) = ({n}, {m})")
    return n * n + n + m


@lru_cache(maxsize=None)
def degree_order(nmax: int) -> tuple[np.ndarray, np.ndarray]:
    """Degree and order arrays matching the flat layout."""
    n = np.concatenate([np.full(2 * k + 1, k) for k in range(nmax + 1)])
    m = np.concatenate([np.arange(-k, k + 1) for k in range(nmax + 1)])
    n.setflags(write=False)
    m.setflags(write=False)
    return n, m


def degrees(nmax: int) -> np.ndarray:
    return degree_order(nmax)[0]


@dataclass
class ScalarCoeffs:
    """Scalar field as real orthonormal harmonic coefficients up to ``nmax``."""

    nmax: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (ncoeffs(self.nmax),):
            raise InvalidArgument(
                f"expected {ncoeffs(self.nmax)} coefficients for nmax={self.nmax}, "
                f"got shape {self.values.shape}"
            )

    @classmethod
    def zeros(cls, nmax: int) -> "ScalarCoeffs":
        return cls(nmax, np.zeros(ncoeffs(nmax)))

    @classmethod
    def single(cls, nmax: int, n: int, m: int, value: float = 1.0) -> "ScalarCoeffs":
        c = cls.zeros(nmax)
        c.values[index(n, m)] = value
        return c

    def __getitem__(self, nm):
        n, m = nm
        return self.values[index(n, m)]

    @property
    def mean_coeff(self) -> float:
        return float(self.values[0])

    def is_zero_mean(self, tol: float = 1e-14) -> bool:
        return abs(self.values[0]) <= tol

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def to_json(self) -> str:
        return json.dumps(
            {
                "basis": BASIS_NAME,
                "nmax": self.nmax,
                "layout": LAYOUT_NAME,
                "values": [float(format(v, ".17g")) for v in self.values],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "ScalarCoeffs":
        obj = json.loads(text)
        if obj.get("basis", BASIS_NAME) != BASIS_NAME or obj.get("layout", LAYOUT_NAME) != LAYOUT_NAME:
            raise InvalidArgument("unsupported coefficient basis or layout")
        return cls(int(obj["nmax"]), np.array(obj["values"], dtype=float))


@dataclass
class TangentBasisCoeffs:
    """Tangent field against the unit-norm gradient and curl families.

    ``grad_values`` multiply ``grad_S Y_{n,m} / sqrt(n(n+1))`` and ``curl_values``
    multiply ``(x cross grad_S) Y_{n,m} / sqrt(n(n+1))``. Degree 0 slots are kept
    in the flat layout for indexing convenience and are always zero.
    """

    nmax: int
    grad_values: np.ndarray = field(repr=False)
    curl_values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.grad_values = np.asarray(self.grad_values, dtype=float)
        self.curl_values = np.asarray(self.curl_values, dtype=float)
        if self.grad_values[0] != 0.0 or self.curl_values[0] != 0.0:
            raise InvalidArgument("tangent basis has no degree-0 member")


# -- Legendre functions -----------------------------------------------------


def normalized_legendre(nmax: int, x: np.ndarray) -> np.ndarray:
    """Fully normalised ``Pbar_n^m(x)`` for ``0 <= m <= n <= nmax``.

    Returns an array of shape ``(nmax+1, nmax+1, len(x))`` indexed ``[n, m]``.
    Uses the standard sectoral seed and the three-term recursion in ``n``,
    which stays well scaled for the degrees used here.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    s = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    p = np.zeros((nmax + 1, nmax + 1, x.size))
    p[0, 0] = 1.0 / np.sqrt(4.0 * np.pi)
    for m in range(1, nmax + 1):
        p[m, m] = np.sqrt((2.0 * m + 1.0) / (2.0 * m)) * s * p[m - 1, m - 1]
    for m in range(0, nmax):
        p[m + 1, m] = np.sqrt(2.0 * m + 3.0) * x * p[m, m]
    for m in range(0, nmax + 1):
        for n in range(m + 2, nmax + 1):
            a = np.sqrt((4.0 * n * n - 1.0) / (n * n - m * m))
            b = np.sqrt(((n - 1.0) ** 2 - m * m) / (4.0 * (n - 1.0) ** 2 - 1.0))
            p[n, m] = a * (x * p[n - 1, m] - b * p[n - 2, m])
    return p


def _legendre_theta_derivative(p: np.ndarray, x: np.ndarray) -> np.ndarray:
    # sin(t) dPbar_n^m/dt = n x Pbar_n^m - sqrt((n^2-m^2)(2n+1)/(2n-1)) Pbar_{n-1}^m
    nmax = p.shape[0] - 1
    s = np.sqrt(1.0 - x * x)
    dp = np.zeros_like(p)
    for n in range(1, nmax + 1):
        for m in range(0, n + 1):
            c = np.sqrt((n * n - m * m) * (2.0 * n + 1.0) / (2.0 * n - 1.0))
            prev = p[n - 1, m] if m <= n - 1 else 0.0
            dp[n, m] = (n * x * p[n, m] - c * prev) / s
    return dp


def _azimuthal(nmax: int, phi: np.ndarray):
    _, m = degree_order(nmax)
    # trig of each |m| once, then gathered into the flat layout
    ang = np.arange(nmax + 1)[:, None] * phi[None, :]
    c, s = np.cos(ang), np.sin(ang)
    am = np.abs(m)
    pos = (m >= 0)[:, None]
    fac = np.where(m == 0, 1.0, np.sqrt(2.0))[:, None]
    trig = np.where(pos, c[am], s[am]) * fac
    dtrig = np.where(pos, -s[am], c[am]) * (am[:, None] * fac)
    return trig, dtrig


def eval_harmonics(nmax: int, theta, phi) -> np.ndarray:
    """Matrix ``Y[k, i] = Y_i(theta_k, phi_k)``, shape ``(npts, (nmax+1)^2)``."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    n, m = degree_order(nmax)
    p = normalized_legendre(nmax, np.cos(theta))
    trig, _ = _azimuthal(nmax, phi)
    return (p[n, np.abs(m)] * trig).T


def eval_tangent_basis(nmax: int, theta, phi) -> tuple[np.ndarray, np.ndarray]:
    """Cartesian samples of the unit-norm gradient and curl basis fields.

    Returns ``(G, C)`` each of shape ``(npts, 3, (nmax+1)^2)``; the degree-0
    columns are zero. Not defined at the poles.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    n, m = degree_order(nmax)
    x = np.cos(theta)
    p = normalized_legendre(nmax, x)
    dp = _legendre_theta_derivative(p, x)
    trig, dtrig = _azimuthal(nmax, phi)
    am = np.abs(m)
    d_theta = (dp[n, am] * trig).T
    d_phi = (p[n, am] * dtrig).T / np.sin(theta)[:, None]
    scale = np.zeros(n.shape)
    scale[n > 0] = 1.0 / np.sqrt(n[n > 0] * (n[n > 0] + 1.0))
    _, e_t, e_p = local_frame(theta, phi)
    G = (e_t[:, :, None] * d_theta[:, None, :] + e_p[:, :, None] * d_phi[:, None, :]) * scale
    # r_hat x e_theta = e_phi, r_hat x e_phi = -e_theta
    C = (e_p[:, :, None] * d_theta[:, None, :] - e_t[:, :, None] * d_phi[:, None, :]) * scale
    return G, C


# -- transforms -------------------------------------------------------------


@lru_cache(maxsize=32)
def _grid_harmonics(nmax: int, n_theta: int, n_phi: int, grid_key: bytes) -> np.ndarray:
    theta = np.frombuffer(grid_key, dtype=float)
    n_t = theta.size
    grid_theta = np.repeat(theta, n_phi)
    grid_phi = np.tile(2.0 * np.pi * np.arange(n_phi) / n_phi, n_t)
    Y = eval_harmonics(nmax, grid_theta, grid_phi)
    Y.setflags(write=False)
    return Y


def grid_harmonics(grid: SphereGrid, nmax: int) -> np.ndarray:
    """Cached ``Y`` matrix of the harmonics sampled on ``grid``."""
    return _grid_harmonics(nmax, grid.n_theta, grid.n_phi, grid.theta_1d.tobytes())


def _check_exact(grid: SphereGrid, nmax: int):
    if grid.exact_degree() < nmax:
        raise PreconditionViolation(
            f"grid ({grid.n_theta}, {grid.n_phi}) integrates products only up to degree "
            f"2*{grid.exact_degree()}; need 2*{nmax}"
        )


def sh_analyze(samples, grid: SphereGrid, nmax: int) -> ScalarCoeffs:
    _check_exact(grid, nmax)
    samples = np.asarray(samples, dtype=float)
    Y = grid_harmonics(grid, nmax)
    return ScalarCoeffs(nmax, Y.T @ (grid.weights * samples))


def sh_synthesize(coeffs: ScalarCoeffs, grid: SphereGrid) -> np.ndarray:
    Y = grid_harmonics(grid, coeffs.nmax)
    return Y @ coeffs.values


def surface_gradient_coeffs(f: ScalarCoeffs) -> TangentBasisCoeffs:
    n = degrees(f.nmax)
    return TangentBasisCoeffs(f.nmax, np.sqrt(n * (n + 1.0)) * f.values, np.zeros_like(f.values))


def synthesize_tangent(t: TangentBasisCoeffs, grid: SphereGrid) -> np.ndarray:
    """Cartesian samples ``(size, 3)`` of a tangent field."""
    G, C = eval_tangent_basis(t.nmax, grid.theta, grid.phi)
    return G @ t.grad_values + C @ t.curl_values


def analyze_tangent(field: np.ndarray, grid: SphereGrid, nmax: int) -> TangentBasisCoeffs:
    """Project the tangential part of a sampled vector field on the basis families.

    Exact for fields of degree ``<= nmax`` when the grid has
    ``n_theta >= nmax + 2`` and ``n_phi >= 2 nmax + 1``.
    """
    if grid.n_theta < nmax + 2 or grid.n_phi < 2 * nmax + 1:
        raise PreconditionViolation(
            f"grid ({grid.n_theta}, {grid.n_phi}) too coarse for tangent analysis at degree {nmax}"
        )
    G, C = eval_tangent_basis(nmax, grid.theta, grid.phi)
    wf = grid.weights[:, None] * np.asarray(field, dtype=float)
    grad = np.einsum("kc,kci->i", wf, G)
    curl = np.einsum("kc,kci->i", wf, C)
    grad[0] = curl[0] = 0.0
    return TangentBasisCoeffs(nmax, grad, curl)

"""Hardy-type decomposition of vector fields on the sphere.

A square-integrable field is written as

    f = B+ phi + B- psi + curl_S chi

with ``B+ phi = nu (K - 1/2) phi + grad_S S phi`` (restriction of the gradient
of the interior harmonic extension of ``S phi``) and
``B- psi = nu (K + 1/2) psi + grad_S S psi`` (exterior). ``phi`` has zero
mean; ``psi`` is unrestricted; ``chi`` carries the tangential curl part.

Fields are handled spectrally as three coefficient vectors: the normal
component in ``Y_{n,m}``, the tangential part in the unit gradient basis and
in the unit curl basis. These three blocks are mutually orthogonal in
``L^2``, so field inner products are plain dot products.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, PreconditionViolation
from .grid import SphereGrid, cartesian_to_spherical, local_frame
from .harmonics import (
    ScalarCoeffs,
    analyze_tangent,
    degree_order,
    degrees,
    eval_harmonics,
    eval_tangent_basis,
    grid_harmonics,
    ncoeffs,
    sh_analyze,
)
from .potentials import multipliers

MEAN_TOL = 1e-14


@dataclass(frozen=True)
class VectorFieldCoeffs:
    """Hardy coordinates ``(phi, psi, chi)`` of a bandlimited field."""

    nmax: int
    phi: np.ndarray
    psi: np.ndarray
    chi: np.ndarray

    def __post_init__(self):
        k = ncoeffs(self.nmax)
        for name in ("phi", "psi", "chi"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (k,):
                raise InvalidArgument(f"{name} must have {k} coefficients, got {arr.shape}")
            object.__setattr__(self, name, arr)
        # plus and curl potentials live modulo constants
        for name in ("phi", "chi"):
            arr = getattr(self, name)
            if abs(arr[0]) > MEAN_TOL * max(1.0, float(np.linalg.norm(arr))):
                raise InvalidArgument(f"{name} must have zero mean, got {arr[0]!r}")

    def to_json(self) -> str:
        return json.dumps(
            {
                "nmax": self.nmax,
                "basis": "real-orthonormal-sh",
                "layout": "n-major,m=-n..n",
                "phi": self.phi.tolist(),
                "psi": self.psi.tolist(),
                "chi": self.chi.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "VectorFieldCoeffs":
        d = json.loads(text)
        return cls(int(d["nmax"]), np.array(d["phi"]), np.array(d["psi"]), np.array(d["chi"]))


@dataclass(frozen=True)
class SpectralField:
    """Field as (normal, gradient-basis, curl-basis) coefficient blocks."""

    nmax: int
    normal: np.ndarray
    grad: np.ndarray
    curl: np.ndarray

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _match(self.nmax, other.nmax)
        return SpectralField(self.nmax, self.normal + other.normal, self.grad + other.grad, self.curl + other.curl)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return self + other.scaled(-1.0)

    def scaled(self, a: float) -> "SpectralField":
        return SpectralField(self.nmax, a * self.normal, a * self.grad, a * self.curl)

    def inner(self, other: "SpectralField") -> float:
        _match(self.nmax, other.nmax)
        return float(self.normal @ other.normal + self.grad @ other.grad + self.curl @ other.curl)

    def norm(self) -> float:
        return float(np.sqrt(self.inner(self)))


def _match(a: int, b: int):
    if a != b:
        raise InvalidArgument(f"degree mismatch: {a} vs {b}")


def _coeffs(f, nmax: int | None = None) -> tuple[int, np.ndarray]:
    if isinstance(f, ScalarCoeffs):
        return f.nmax, f.values
    v = np.asarray(f, dtype=float)
    n = int(round(np.sqrt(v.size))) - 1
    if ncoeffs(n) != v.size:
        raise InvalidArgument(f"{v.size} is not a square coefficient count")
    return n, v


def _sqrt_nn1(nmax: int) -> np.ndarray:
    n = degrees(nmax).astype(float)
    return np.sqrt(n * (n + 1.0))


def apply_bplus(phi) -> SpectralField:
    """``B+ phi``; ``phi`` must have zero mean."""
    nmax, v = _coeffs(phi)
    if abs(v[0]) > MEAN_TOL * max(1.0, float(np.linalg.norm(v))):
        raise InvalidArgument(f"B+ needs a zero-mean potential, mean coefficient is {v[0]!r}")
    ms = multipliers(nmax)
    grad = _sqrt_nn1(nmax) * ms.S.expand() * v
    return SpectralField(nmax, ms.K_minus.expand() * v, grad, np.zeros_like(v))


def apply_bminus(psi) -> SpectralField:
    """``B- psi`` for any ``psi``."""
    nmax, v = _coeffs(psi)
    ms = multipliers(nmax)
    grad = _sqrt_nn1(nmax) * ms.S.expand() * v
    return SpectralField(nmax, ms.K_plus.expand() * v, grad, np.zeros_like(v))


def apply_curl(chi) -> SpectralField:
    nmax, v = _coeffs(chi)
    z = np.zeros_like(v)
    return SpectralField(nmax, z, z.copy(), _sqrt_nn1(nmax) * v)


def compose(c: VectorFieldCoeffs) -> SpectralField:
    return apply_bplus(c.phi) + apply_bminus(c.psi) + apply_curl(c.chi)


def decompose_spectral(f: SpectralField) -> VectorFieldCoeffs:
    """Invert :func:`compose` degree by degree.

    For ``n >= 1`` the normal and gradient blocks give the 2x2 system
    ``[[l-, l+], [a, a]] (phi, psi) = (normal, grad)`` with
    ``a = sqrt(n(n+1)) lam_S``, whose determinant is ``a (l- - l+) = -a``.
    """
    nmax = f.nmax
    ms = multipliers(nmax)
    lm, lp = ms.K_minus.expand(), ms.K_plus.expand()
    a = _sqrt_nn1(nmax) * ms.S.expand()
    phi = np.zeros(ncoeffs(nmax))
    psi = np.zeros_like(phi)
    chi = np.zeros_like(phi)
    hi = slice(1, None)
    det = lm[hi] - lp[hi]
    s = f.grad[hi] / a[hi]  # phi + psi
    phi[hi] = (f.normal[hi] - lp[hi] * s) / det
    psi[hi] = s - phi[hi]
    chi[hi] = f.curl[hi] / _sqrt_nn1(nmax)[hi]
    # degree 0: B+ contributes nothing, B- 1 = nu
    psi[0] = f.normal[0]
    return VectorFieldCoeffs(nmax, phi, psi, chi)


# -- grid samples -----------------------------------------------------------


def synthesize(c: VectorFieldCoeffs | SpectralField, grid: SphereGrid) -> np.ndarray:
    """Cartesian samples ``(size, 3)`` of the field on ``grid``."""
    f = compose(c) if isinstance(c, VectorFieldCoeffs) else c
    Y = grid_harmonics(grid, f.nmax)
    G, C = eval_tangent_basis(f.nmax, grid.theta, grid.phi)
    r_hat, _, _ = local_frame(grid.theta, grid.phi)
    return r_hat * (Y @ f.normal)[:, None] + G @ f.grad + C @ f.curl


def analyze(samples: np.ndarray, grid: SphereGrid, nmax: int) -> SpectralField:
    samples = np.asarray(samples, dtype=float)
    if samples.shape != (grid.size, 3):
        raise InvalidArgument(f"expected ({grid.size}, 3) samples, got {samples.shape}")
    if not np.all(np.isfinite(samples)):
        raise InvalidArgument("field samples contain non-finite values")
    if grid.n_theta < nmax + 2 or grid.n_phi < 2 * nmax + 1:
        raise PreconditionViolation(
            f"grid ({grid.n_theta}, {grid.n_phi}) cannot resolve degree {nmax}; "
            f"need n_theta >= {nmax + 2} and n_phi >= {2 * nmax + 1}"
        )
    r_hat, _, _ = local_frame(grid.theta, grid.phi)
    normal = np.einsum("kc,kc->k", samples, r_hat)
    tangential = samples - r_hat * normal[:, None]
    t = analyze_tangent(tangential, grid, nmax)
    return SpectralField(nmax, sh_analyze(normal, grid, nmax).values, t.grad_values, t.curl_values)


def decompose(samples: np.ndarray, grid: SphereGrid, nmax: int) -> VectorFieldCoeffs:
    """Hardy coordinates of sampled Cartesian field values."""
    return decompose_spectral(analyze(samples, grid, nmax))


# -- harmonic extension -----------------------------------------------------


def harmonic_extension_eval(potential, points, side: str) -> tuple[np.ndarray, np.ndarray]:
    """Value and gradient of the volume single layer of ``potential``.

    Inside the unit ball ``S Y_n`` extends as ``lam_S r^n Y_n``; outside as
    ``lam_S r^-(n+1) Y_n``. Returns ``(values, gradients)`` with shapes
    ``(npts,)`` and ``(npts, 3)``. Points on the polar axis are not supported
    (the tangent basis is singular there).
    """
    nmax, v = _coeffs(potential)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    r, theta, phi = cartesian_to_spherical(pts)
    if side == "inner":
        if np.any(r >= 1.0):
            raise InvalidArgument("inner evaluation needs |x| < 1")
    elif side == "outer":
        if np.any(r <= 1.0):
            raise InvalidArgument("outer evaluation needs |x| > 1")
    else:
        raise InvalidArgument(f"side must be 'inner' or 'outer', got {side!r}")
    ms = multipliers(nmax)
    n = degrees(nmax).astype(float)
    c = ms.S.expand() * v
    Y = eval_harmonics(nmax, theta, phi)
    if side == "inner":
        radial = r[:, None] ** n
        dradial = n * r[:, None] ** np.maximum(n - 1.0, 0.0)
    else:
        radial = r[:, None] ** (-(n + 1.0))
        dradial = -(n + 1.0) * r[:, None] ** (-(n + 2.0))
    values = (Y * radial) @ c
    G, C = eval_tangent_basis(nmax, theta, phi)
    r_hat, _, _ = local_frame(theta, phi)
    # tangential gradient of r^k Y at radius r is r^k grad_S Y / r
    tang = np.einsum("kci,ki->kc", G, radial * _sqrt_nn1(nmax) * c / r[:, None])
    grads = r_hat * ((Y * dradial) @ c)[:, None] + tang
    return values, grads


def random_coeffs(nmax: int, rng: np.random.Generator, decay: float = 0.0) -> np.ndarray:
    n, _ = degree_order(nmax)
    return rng.standard_normal(ncoeffs(nmax)) / (1.0 + n) ** decay

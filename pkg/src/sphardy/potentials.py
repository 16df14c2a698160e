"""Layer potentials on the unit sphere.

Every operator here is diagonal in the harmonic basis. The per-degree
multipliers are not typed in: :func:`derive_multipliers` measures them by
applying kernel quadrature to zonal harmonics and regressing the
proportionality constant, and refuses to return values the quadrature does
not reproduce.

Three independent numerical routes are provided:

* a target-centred polar quadrature of the single and double layer kernels
  (the ``1/|x-y|`` singularity is cancelled by the polar Jacobian, so
  Gauss-Legendre converges spectrally),
* a radial-derivative oracle that samples the volume potential along a ray on
  either side of the sphere and differentiates a fitted radial polynomial at
  ``r = 1``,
* a plain product-grid quadrature with singularity subtraction
  (:func:`kernel_quadrature_single_layer`), first-order accurate.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.special import roots_legendre

from .errors import InternalConsistencyError, InvalidArgument
from .grid import SphereGrid, cartesian_to_spherical
from .harmonics import ScalarCoeffs, degrees, eval_harmonics, index, ncoeffs, normalized_legendre

MULTIPLIER_TOL = 1e-6

# regression targets (theta, phi); the pole keeps every zonal harmonic away from zero
_TARGETS = np.array([[0.0, 0.0], [0.35, 0.4], [0.9, 2.1], [1.7, 4.0], [2.6, 5.5]])


@dataclass(frozen=True)
class SpectralMultiplier:
    name: str
    values: np.ndarray

    @property
    def nmax(self) -> int:
        return len(self.values) - 1

    def expand(self) -> np.ndarray:
        """Per-coefficient diagonal in the flat (n, m) layout."""
        return self.values[degrees(self.nmax)]


@dataclass(frozen=True)
class MultiplierSet:
    S: SpectralMultiplier
    K: SpectralMultiplier
    K_plus: SpectralMultiplier
    K_minus: SpectralMultiplier
    lap_S: SpectralMultiplier
    regression_residual: float

    @property
    def nmax(self) -> int:
        return self.S.nmax

    def truncate(self, nmax: int) -> "MultiplierSet":
        if nmax > self.nmax:
            raise InvalidArgument(f"multipliers derived up to {self.nmax}, requested {nmax}")
        cut = lambda op: SpectralMultiplier(op.name, op.values[: nmax + 1].copy())
        return MultiplierSet(
            cut(self.S), cut(self.K), cut(self.K_plus), cut(self.K_minus), cut(self.lap_S),
            self.regression_residual,
        )


# -- target-centred quadrature ------------------------------------------------


def _frame(direction: np.ndarray) -> np.ndarray:
    """Orthonormal rows ``(e1, e2, e3)`` with ``e3`` along ``direction``."""
    e3 = direction / np.linalg.norm(direction)
    helper = np.array([1.0, 0.0, 0.0]) if abs(e3[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = helper - (helper @ e3) * e3
    e1 /= np.linalg.norm(e1)
    return np.stack([e1, np.cross(e3, e1), e3])


@lru_cache(maxsize=16)
def _polar_rule(n_theta: int, n_phi: int):
    # Gauss-Legendre in the polar angle itself (not its cosine)
    t, w = roots_legendre(n_theta)
    t = 0.5 * np.pi * (t + 1.0)
    w = 0.5 * np.pi * w
    p = 2.0 * np.pi * np.arange(n_phi) / n_phi
    tt = np.repeat(t, n_phi)
    pp = np.tile(p, n_theta)
    ww = np.repeat(w * np.sin(t), n_phi) * (2.0 * np.pi / n_phi)
    local = np.stack([np.sin(tt) * np.cos(pp), np.sin(tt) * np.sin(pp), np.cos(tt)], axis=-1)
    return local, ww


def polar_nodes(direction, n_theta: int = 96, n_phi: int = 96):
    """Unit-sphere nodes polar about ``direction`` with surface weights."""
    local, w = _polar_rule(n_theta, n_phi)
    return local @ _frame(np.asarray(direction, dtype=float)), w


def single_layer_volume(f: Callable, x, n_theta: int = 160, n_phi: int = 96) -> float:
    """``-1/(4 pi) int f(y)/|x - y| dw(y)`` at any point ``x`` off or on the sphere.

    ``f`` maps an ``(npts, 3)`` array of unit vectors to values.
    """
    x = np.asarray(x, dtype=float)
    y, w = polar_nodes(x if np.linalg.norm(x) > 0 else np.array([0.0, 0.0, 1.0]), n_theta, n_phi)
    d = np.linalg.norm(x[None, :] - y, axis=1)
    return float(-np.sum(w * f(y) / d) / (4.0 * np.pi))


def _harmonic_callable(nmax: int, cols=None):
    def f(y):
        _, t, p = cartesian_to_spherical(y)
        Y = eval_harmonics(nmax, t, p)
        return Y if cols is None else Y[:, cols]

    return f


def _oracle_layers(nmax: int, target: np.ndarray, n_theta: int, n_phi: int):
    """Single and double layer of every harmonic up to ``nmax`` at one target."""
    y, w = polar_nodes(target, n_theta, n_phi)
    Y = _harmonic_callable(nmax)(y)
    diff = target[None, :] - y
    d = np.linalg.norm(diff, axis=1)
    s_kernel = -1.0 / (4.0 * np.pi * d)
    # outward normal on the unit sphere is y itself
    k_kernel = -np.einsum("kc,kc->k", y, diff) / (4.0 * np.pi * d**3)
    return (w * s_kernel) @ Y, (w * k_kernel) @ Y


def oracle_single_layer(nmax: int, target) -> np.ndarray:
    """``(S Y_i)(target)`` for all flat indices ``i``, by polar quadrature."""
    n_theta, n_phi = max(64, 2 * nmax + 40), max(64, 2 * nmax + 8)
    return _oracle_layers(nmax, np.asarray(target, dtype=float), n_theta, n_phi)[0]


def oracle_double_layer(nmax: int, target) -> np.ndarray:
    """``(K Y_i)(target)`` for all flat indices ``i``, by polar quadrature."""
    n_theta, n_phi = max(64, 2 * nmax + 40), max(64, 2 * nmax + 8)
    return _oracle_layers(nmax, np.asarray(target, dtype=float), n_theta, n_phi)[1]


def radial_oracle(n: int, side: str, n_radii: int = 14) -> tuple[float, float]:
    """Surface value and normal derivative of the volume single layer of ``Y_{n,0}``.

    The potential is sampled along the polar axis at Chebyshev radii inside
    (``side='inner'``) or outside (``side='outer'``) the sphere. Inside it is a
    polynomial in ``r``; outside a polynomial in ``1/r``. The fitted
    polynomial and its radial derivative are evaluated at ``r = 1`` and divided
    by ``Y_{n,0}(pole)``, giving one-sided estimates of ``lam_S(n)`` and of
    ``lam_{K-1/2}(n)`` (inner) or ``lam_{K+1/2}(n)`` (outer).
    """
    f = _harmonic_callable(n, cols=[index(n, 0)])
    g = lambda y: f(y)[:, 0]
    k = np.arange(n_radii)
    cheb = 0.5 * (1.0 - np.cos(np.pi * (k + 0.5) / n_radii))
    deg = n + 2
    if side == "inner":
        r = 0.25 + 0.6 * cheb
        vals = np.array([single_layer_volume(g, [0.0, 0.0, ri], n_theta=256) for ri in r])
        c = npoly.polyfit(r, vals, deg)
        deriv = npoly.polyval(1.0, npoly.polyder(c))
    elif side == "outer":
        s = 0.3 + 0.55 * cheb  # s = 1/r
        vals = np.array([single_layer_volume(g, [0.0, 0.0, 1.0 / si], n_theta=256) for si in s])
        c = npoly.polyfit(s, vals, deg)
        # d/dr = -s^2 d/ds, s = 1 at the surface
        deriv = -npoly.polyval(1.0, npoly.polyder(c))
    else:
        raise InvalidArgument(f"side must be 'inner' or 'outer', got {side!r}")
    y_pole = eval_harmonics(n, 0.0, 0.0)[0, index(n, 0)]
    return float(npoly.polyval(1.0, c) / y_pole), float(deriv / y_pole)


def radial_derivative_oracle(n: int, side: str, n_radii: int = 14) -> float:
    """Normal derivative part of :func:`radial_oracle`."""
    return radial_oracle(n, side, n_radii)[1]


# -- derivation -------------------------------------------------------------


def _regress(values: np.ndarray, basis: np.ndarray) -> tuple[float, float]:
    lam = float(values @ basis / (basis @ basis))
    resid = float(np.max(np.abs(values - lam * basis)) / max(np.max(np.abs(lam * basis)), 1e-300))
    return lam, resid


@lru_cache(maxsize=8)
def _derive(nmax: int, corrupt: tuple | None) -> MultiplierSet:
    targets = np.array([[np.sin(t) * np.cos(p), np.sin(t) * np.sin(p), np.cos(t)] for t, p in _TARGETS])
    sl = np.array([oracle_single_layer(nmax, x) for x in targets])
    dl = np.array([oracle_double_layer(nmax, x) for x in targets])
    _, th, ph = cartesian_to_spherical(targets)
    Y = eval_harmonics(nmax, th, ph)
    lam_s = np.zeros(nmax + 1)
    lam_k = np.zeros(nmax + 1)
    worst = 0.0
    for n in range(nmax + 1):
        i = index(n, 0)
        lam_s[n], r1 = _regress(sl[:, i], Y[:, i])
        lam_k[n], r2 = _regress(dl[:, i], Y[:, i])
        worst = max(worst, r1, r2)
    if worst > MULTIPLIER_TOL:
        raise InternalConsistencyError(
            f"kernel quadrature is not proportional to the input harmonic (residual {worst:.3e})"
        )
    k_plus = lam_k + 0.5
    k_minus = lam_k - 0.5
    # exact on constants: K + 1/2 preserves them, K - 1/2 annihilates them
    for name, val, want in (("K+1/2", k_plus[0], 1.0), ("K-1/2", k_minus[0], 0.0)):
        if abs(val - want) > 1e-12:
            raise InternalConsistencyError(f"{name} on constants gave {val!r}, expected {want}")
    k_plus[0], k_minus[0] = 1.0, 0.0
    n = np.arange(nmax + 1)
    lap_s = -n * (n + 1.0) * lam_s
    if corrupt is not None:
        which, deg, factor = corrupt
        {"S": lam_s, "K+": k_plus, "K-": k_minus}[which][deg] *= factor
    return MultiplierSet(
        SpectralMultiplier("S", lam_s),
        SpectralMultiplier("K", lam_k),
        SpectralMultiplier("K+1/2", k_plus),
        SpectralMultiplier("K-1/2", k_minus),
        SpectralMultiplier("Lap_S S", lap_s),
        worst,
    )


def derive_multipliers(nmax: int, corrupt: tuple | None = None) -> MultiplierSet:
    """Measure the multipliers of ``S``, ``K``, ``K +- 1/2`` and ``Lap_S S``.

    ``corrupt=(name, degree, factor)`` scales one stored value after the
    derivation; it exists only so validation can be shown to catch a bad table.
    """
    if nmax < 0:
        raise InvalidArgument("nmax must be >= 0")
    return _derive(int(nmax), corrupt)


@lru_cache(maxsize=None)
def multipliers(nmax: int) -> MultiplierSet:
    """Derived multipliers, computed once at a comfortable degree and truncated."""
    base = max(nmax, 32)
    return derive_multipliers(base).truncate(nmax)


def apply_multiplier(op: SpectralMultiplier, f: ScalarCoeffs) -> ScalarCoeffs:
    if op.nmax != f.nmax:
        raise InvalidArgument(f"multiplier degree {op.nmax} does not match coefficients {f.nmax}")
    return ScalarCoeffs(f.nmax, op.expand() * f.values)


def apply_inverse_single_layer(f: ScalarCoeffs) -> ScalarCoeffs:
    lam = multipliers(f.nmax).S.expand()
    return ScalarCoeffs(f.nmax, f.values / lam)


def identity_residuals(ms: MultiplierSet) -> np.ndarray:
    """Per-degree ``|lam_S^2 n(n+1) + lam_{K+} lam_{K-}|``."""
    n = np.arange(ms.nmax + 1)
    return np.abs(ms.S.values**2 * n * (n + 1.0) + ms.K_plus.values * ms.K_minus.values)


# -- first-order grid quadrature ---------------------------------------------


def kernel_quadrature_single_layer(values, grid: SphereGrid, target, f_target: float | None = None) -> float:
    """Single layer potential of a grid field at one point of the sphere.

    Uses singularity subtraction::

        S f(x) = -1/(4 pi) [ sum_k w_k (f(y_k) - f(x)) / |x - y_k| + 4 pi f(x) ]

    where ``4 pi`` is the kernel integral of the constant function (``S 1 = -1``).
    ``f(x)`` is taken from ``f_target`` or, if omitted, from bandlimited
    interpolation of the grid samples. Nodes coinciding with the target are
    skipped. First-order accurate in the grid spacing.
    """
    values = np.asarray(values, dtype=float)
    x = np.asarray(target, dtype=float)
    x = x / np.linalg.norm(x)
    if f_target is None:
        f_target = interpolate_grid_field(values, grid, x)
    y = grid.points()
    d = np.linalg.norm(x[None, :] - y, axis=1)
    keep = d > 1e-14
    smooth = np.sum(grid.weights[keep] * (values[keep] - f_target) / d[keep])
    return float(-(smooth + 4.0 * np.pi * f_target) / (4.0 * np.pi))


def interpolate_grid_field(values, grid: SphereGrid, target) -> float:
    """Bandlimited interpolation of grid samples at one point.

    The samples are analysed up to the grid's exact degree with an FFT in
    longitude and Gauss-Legendre sums in latitude, then summed at ``target``.
    """
    nmax = grid.exact_degree()
    f = np.asarray(values, dtype=float).reshape(grid.n_theta, grid.n_phi)
    four = np.fft.rfft(f, axis=1)[:, : nmax + 1] * (2.0 * np.pi / grid.n_phi)
    wx = grid.weights.reshape(grid.n_theta, grid.n_phi)[:, 0] * grid.n_phi / (2.0 * np.pi)
    p = normalized_legendre(nmax, np.cos(grid.theta_1d))  # (n, m, ring)
    _, t, ph = cartesian_to_spherical(np.asarray(target, dtype=float)[None, :])
    pt = normalized_legendre(nmax, np.cos(t))[:, :, 0]
    total = 0.0
    for m in range(nmax + 1):
        # ring sums against cos(m phi) and sin(m phi)
        ca = (p[m:, m] * wx) @ four[:, m].real
        sa = -(p[m:, m] * wx) @ four[:, m].imag
        if m == 0:
            total += float(pt[m:, 0] @ ca)
        else:
            total += 2.0 * float(pt[m:, m] @ (ca * np.cos(m * ph[0]) + sa * np.sin(m * ph[0])))
    return total


def multiplier_table(ms: MultiplierSet) -> list[dict]:
    rows = []
    resid = identity_residuals(ms)
    for n in range(ms.nmax + 1):
        rows.append(
            {
                "n": n,
                "lambda_S": ms.S.values[n],
                "lambda_K": ms.K.values[n],
                "lambda_K_plus": ms.K_plus.values[n],
                "lambda_K_minus": ms.K_minus.values[n],
                "lambda_lapS": ms.lap_S.values[n],
                "identity_residual": resid[n],
            }
        )
    return rows


def dense_matrix(op: SpectralMultiplier) -> np.ndarray:
    return np.diag(op.expand())


def zero_field(nmax: int) -> ScalarCoeffs:
    return ScalarCoeffs(nmax, np.zeros(ncoeffs(nmax)))

"""Product quadrature grids on the unit sphere and axis-aligned caps.

The grid is Gauss-Legendre in ``cos(theta)`` times a uniform grid in ``phi``.
With ``n_theta >= N + 1`` and ``n_phi >= 2N + 1`` it integrates every product
of two spherical harmonics of degree ``<= N`` exactly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import roots_legendre

from .errors import InvalidArgument

FOUR_PI = 4.0 * np.pi


@dataclass(frozen=True)
class SphereGrid:
    """Gauss-Legendre x uniform-longitude grid.

    Nodes are stored theta-major: node ``k`` has ``theta[k // n_phi]`` and
    ``phi[k % n_phi]``. ``weights`` are in steradians and sum to 4 pi.
    """

    n_theta: int
    n_phi: int
    theta_1d: np.ndarray
    phi_1d: np.ndarray
    weights: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.n_theta * self.n_phi

    @property
    def theta(self) -> np.ndarray:
        return np.repeat(self.theta_1d, self.n_phi)

    @property
    def phi(self) -> np.ndarray:
        return np.tile(self.phi_1d, self.n_theta)

    @property
    def nodes(self) -> np.ndarray:
        """``(size, 3)`` array of ``(theta, phi, w)`` rows."""
        return np.column_stack([self.theta, self.phi, self.weights])

    def points(self) -> np.ndarray:
        """Cartesian unit vectors of the nodes, shape ``(size, 3)``."""
        return spherical_to_cartesian(self.theta, self.phi)

    def exact_degree(self) -> int:
        """Largest ``N`` with products of degree-``N`` harmonics integrated exactly."""
        return min(self.n_theta - 1, (self.n_phi - 1) // 2)

    def integrate(self, values: np.ndarray) -> float | np.ndarray:
        """Quadrature over the sphere along the first axis of ``values``."""
        return np.tensordot(self.weights, values, axes=(0, 0))


@dataclass(frozen=True)
class Cap:
    """Spherical cap ``{theta < theta_c}`` centred on the north pole."""

    theta_c: float

    def __post_init__(self):
        if not (0.0 < self.theta_c < np.pi):
            raise InvalidArgument(f"theta_c must lie in (0, pi), got {self.theta_c!r}")

    @property
    def area(self) -> float:
        return 2.0 * np.pi * (1.0 - np.cos(self.theta_c))


def build_grid(n_theta: int, n_phi: int) -> SphereGrid:
    if n_theta < 1 or n_phi < 1:
        raise InvalidArgument(f"grid counts must be >= 1, got ({n_theta}, {n_phi})")
    x, wx = roots_legendre(n_theta)
    # north to south
    order = np.argsort(-x)
    x, wx = x[order], wx[order]
    theta = np.arccos(x)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    weights = np.repeat(wx, n_phi) * (2.0 * np.pi / n_phi)
    return SphereGrid(n_theta, n_phi, theta, phi, weights)


def default_grid(nmax: int) -> SphereGrid:
    """Grid exact for tangent-field inner products at degree ``nmax``."""
    return build_grid(nmax + 2, 2 * nmax + 2)


def cap_mask(grid: SphereGrid, cap: Cap) -> np.ndarray:
    return (grid.theta < cap.theta_c).astype(np.int8)


def spherical_to_cartesian(theta, phi) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


def cartesian_to_spherical(points) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(r, theta, phi)`` with ``phi`` in ``[0, 2 pi)``."""
    p = np.asarray(points, dtype=float)
    r = np.linalg.norm(p, axis=-1)
    theta = np.arccos(np.clip(p[..., 2] / np.where(r > 0, r, 1.0), -1.0, 1.0))
    phi = np.mod(np.arctan2(p[..., 1], p[..., 0]), 2.0 * np.pi)
    return r, theta, phi


def local_frame(theta, phi) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Unit vectors ``(r_hat, e_theta, e_phi)`` at the given angles."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    ct, st, cp, sp = np.cos(theta), np.sin(theta), np.cos(phi), np.sin(phi)
    r_hat = np.stack([st * cp, st * sp, ct], axis=-1)
    e_theta = np.stack([ct * cp, ct * sp, -st], axis=-1)
    e_phi = np.stack([-sp, cp, np.zeros_like(phi)], axis=-1)
    return r_hat, e_theta, e_phi


# -- grid field files -------------------------------------------------------

_SCALAR_HEADER = ["theta", "phi", "value"]
_VECTOR_HEADER = ["theta", "phi", "vx", "vy", "vz"]


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_grid_field(path, grid: SphereGrid, values: np.ndarray) -> None:
    """Write a scalar ``(size,)`` or vector ``(size, 3)`` field as CSV."""
    values = np.asarray(values, dtype=float)
    vector = values.ndim == 2
    if values.shape[0] != grid.size or (vector and values.shape[1] != 3):
        raise InvalidArgument(f"field shape {values.shape} does not match grid size {grid.size}")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_VECTOR_HEADER if vector else _SCALAR_HEADER)
        for t, p, v in zip(grid.theta, grid.phi, values):
            row = [_fmt(t), _fmt(p)]
            row += [_fmt(c) for c in v] if vector else [_fmt(v)]
            w.writerow(row)


def read_grid_field(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Read a grid field CSV; returns ``(theta, phi, values)``."""
    with open(Path(path), newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if header not in (_SCALAR_HEADER, _VECTOR_HEADER):
        raise InvalidArgument(f"unrecognised grid field header {header}")
    data = np.array([[float(c) for c in r] for r in body], dtype=float).reshape(len(body), len(header))
    values = data[:, 2] if header == _SCALAR_HEADER else data[:, 2:]
    return data[:, 0], data[:, 1], values


def grid_from_nodes(theta: np.ndarray, phi: np.ndarray) -> SphereGrid:
    """Recover the product grid that produced a theta-major node list."""
    theta_1d = np.unique(theta)
    phi_1d = np.unique(phi)
    grid = build_grid(len(theta_1d), len(phi_1d))
    if grid.size != len(theta) or not (
        np.allclose(grid.theta, theta, atol=1e-12) and np.allclose(grid.phi, phi, atol=1e-12)
    ):
        raise InvalidArgument("node list is not a theta-major Gauss-Legendre product grid")
    return grid

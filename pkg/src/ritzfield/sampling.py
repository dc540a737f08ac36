"""Collocation-point generators: base-2 Sobol batches and uniform grids."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

# Direction-number parameters (degree, coefficient bits, initial m values) for
# the first Sobol dimensions after the van der Corput dimension.  Taken from
# the standard primitive-polynomial tables.
_DIM_PARAMS = [
    (1, 0, [1]),        # x + 1
    (2, 1, [1, 3]),     # x^2 + x + 1
]

_MAXBITS = 32
_SCALE = float(1 << _MAXBITS)


def _direction_table(dim: int) -> np.ndarray:
    """32 direction integers (scaled by 2^32) for one Sobol dimension."""
    V = np.zeros(_MAXBITS, dtype=np.uint64)
    if dim == 0:
        for k in range(_MAXBITS):
            V[k] = np.uint64(1) << np.uint64(_MAXBITS - 1 - k)
        return V
    s, a, m = _DIM_PARAMS[dim - 1]
    for k in range(s):
        V[k] = np.uint64(m[k]) << np.uint64(_MAXBITS - 1 - k)
    for k in range(s, _MAXBITS):
        v = V[k - s] ^ (V[k - s] >> np.uint64(s))
        for i in range(1, s):
            if (a >> (s - 1 - i)) & 1:
                v ^= V[k - i]
        V[k] = v
    return V


_TABLES = [_direction_table(j) for j in range(1 + len(_DIM_PARAMS))]


def sobol_points(n: int, d: int, skip: int = 0) -> np.ndarray:
    """Elements skip .. skip+n-1 of the base-2 Sobol sequence in [0, 1)^d.

    Gray-code construction: point i is the XOR of the direction integers
    selected by the bits of gray(i) = i ^ (i >> 1), so any window of the
    sequence can be produced directly without iterating from the start.
    """
    if d < 1 or d > len(_TABLES):
        raise ConfigurationError(
            f"sobol dimension {d} outside provisioned range 1..{len(_TABLES)}"
        )
    if n < 1:
        raise ConfigurationError("need n >= 1 sobol points")
    idx = np.arange(skip, skip + n, dtype=np.uint64)
    gray = idx ^ (idx >> np.uint64(1))
    out = np.zeros((n, d), dtype=np.uint64)
    for b in range(_MAXBITS):
        mask = (gray >> np.uint64(b)) & np.uint64(1)
        if not mask.any():
            continue
        for j in range(d):
            out[:, j] ^= mask * _TABLES[j][b]
    return out.astype(float) / _SCALE


@dataclass(frozen=True)
class PointBatch:
    points: np.ndarray                  # (n, d)
    domain: tuple                       # ((lo, hi), ...) per axis
    origin: str                         # "sobol" | "grid" | "custom"

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def volume(self) -> float:
        return float(np.prod([hi - lo for lo, hi in self.domain]))


def _as_domain(domain, d: int) -> tuple:
    dom = tuple((float(lo), float(hi)) for lo, hi in domain)
    if len(dom) != d:
        raise ConfigurationError(f"domain has {len(dom)} axes, expected {d}")
    return dom


def sobol_batch(n: int, d: int, skip: int = 1, domain=None) -> PointBatch:
    """Sobol batch mapped affinely onto the box.

    skip defaults to 1: the all-zeros element sits exactly on the wrap seam of
    a periodic feature lift, so it is dropped by default.
    """
    if domain is None:
        domain = [(0.0, 1.0)] * d
    dom = _as_domain(domain, d)
    pts = sobol_points(n, d, skip)
    lo = np.array([a for a, _ in dom])
    span = np.array([b - a for a, b in dom])
    return PointBatch(points=lo + span * pts, domain=dom, origin="sobol")


def grid_batch(n_per_dim: int, d: int, domain=None, include_right_edge: bool = False) -> PointBatch:
    """Tensor-product uniform grid, row-major (first axis slowest).

    With the right edge excluded the spacing is L/n and the grid tiles the
    periodic box without duplicating the seam.
    """
    if n_per_dim < 2:
        raise ConfigurationError("need n_per_dim >= 2 grid points")
    if domain is None:
        domain = [(0.0, 1.0)] * d
    dom = _as_domain(domain, d)
    axes = []
    for lo, hi in dom:
        if include_right_edge:
            axes.append(np.linspace(lo, hi, n_per_dim))
        else:
            axes.append(lo + (hi - lo) * np.arange(n_per_dim) / n_per_dim)
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    return PointBatch(points=pts, domain=dom, origin="grid")

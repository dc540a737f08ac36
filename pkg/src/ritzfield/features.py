"""Fourier feature lifts gamma(x) = [cos(2 pi B x); sin(2 pi B x)].

Four constructions of the frequency matrix B are supported:

* ``random``     -- rows sampled i.i.d. Normal(0, s^2) (random Fourier features)
* ``cartesian``  -- the full integer tensor product {-f_m..f_m}^d
* ``separable``  -- the zero row plus axis-aligned integer rows only
* ``hybrid``     -- separable rows stacked above random rows

Integer rows are stored divided by the box periods, so the lift is exactly
periodic on the box.  Row order is fixed (lexicographic / axis-major) because
it determines the canonical layout of downstream network parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

KINDS = ("none", "random", "cartesian", "separable", "hybrid")

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class FeatureMap:
    kind: str
    B: np.ndarray                      # (m, d), frequencies already divided by periods
    periods: np.ndarray                # (d,)
    wrap_inputs: bool = True
    # construction metadata, kept so a map can be rebuilt from a checkpoint
    f_m: int | None = None
    m_rff: int | None = None
    scale: float | None = None
    seed: int = 0

    @property
    def m(self) -> int:
        return self.B.shape[0]

    @property
    def d(self) -> int:
        return self.B.shape[1]

    @property
    def out_dim(self) -> int:
        return 2 * self.B.shape[0]

    def wrap(self, x: np.ndarray) -> np.ndarray:
        """Map coordinates into the base cell [0, L_j) componentwise."""
        if not self.wrap_inputs:
            return x
        return np.mod(x, self.periods)


def separable_mode_count(d: int, f_m: int) -> int:
    return 1 + d * (2 * f_m)


def cartesian_mode_count(d: int, f_m: int) -> int:
    return (2 * f_m + 1) ** d


def _separable_rows(d: int, f_m: int) -> np.ndarray:
    rows = [np.zeros(d)]
    for j in range(d):
        for n in range(-f_m, f_m + 1):
            if n == 0:
                continue
            r = np.zeros(d)
            r[j] = n
            rows.append(r)
    return np.array(rows)


def _cartesian_rows(d: int, f_m: int) -> np.ndarray:
    axes = [np.arange(-f_m, f_m + 1, dtype=float)] * d
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def build_feature_map(
    kind: str,
    d: int,
    periods,
    f_m: int | None = None,
    m_rff: int | None = None,
    s: float | None = None,
    seed: int = 0,
    wrap_inputs: bool = True,
) -> FeatureMap | None:
    """Construct a feature map; returns None for kind='none'."""
    if kind not in KINDS:
        raise ConfigurationError(f"unknown feature-map kind {kind!r}")
    if kind == "none":
        return None
    periods = np.asarray(periods, dtype=float).reshape(d)

    needs_fm = kind in ("cartesian", "separable", "hybrid")
    if needs_fm and (f_m is None or f_m < 0):
        raise ConfigurationError(f"kind={kind!r} requires f_m >= 0")
    if kind in ("random", "hybrid"):
        if m_rff is None or m_rff < 1:
            raise ConfigurationError(f"kind={kind!r} requires m_rff >= 1")
        if s is None or s <= 0:
            raise ConfigurationError(f"kind={kind!r} requires scale s > 0")

    parts = []
    if kind == "cartesian":
        parts.append(_cartesian_rows(d, f_m) / periods)
    elif kind in ("separable", "hybrid"):
        parts.append(_separable_rows(d, f_m) / periods)
    if kind in ("random", "hybrid"):
        rng = np.random.default_rng(seed)
        parts.append(rng.normal(0.0, s, size=(m_rff, d)))
    B = np.ascontiguousarray(np.vstack(parts))

    return FeatureMap(
        kind=kind, B=B, periods=periods, wrap_inputs=wrap_inputs,
        f_m=f_m, m_rff=m_rff, scale=s, seed=seed,
    )


def apply_features(fmap: FeatureMap, x) -> np.ndarray:
    """gamma(x) for a single point: (cos(2 pi Bx), sin(2 pi Bx)), length 2m."""
    x = np.asarray(x, dtype=float).reshape(fmap.d)
    phase = TWO_PI * (fmap.B @ fmap.wrap(x))
    return np.concatenate([np.cos(phase), np.sin(phase)])


def apply_features_batch(fmap: FeatureMap, X: np.ndarray) -> np.ndarray:
    """gamma applied row-wise to an (n, d) array, result (n, 2m)."""
    phase = TWO_PI * (fmap.wrap(X) @ fmap.B.T)
    out = np.empty((X.shape[0], fmap.out_dim))
    np.cos(phase, out=out[:, : fmap.m])
    np.sin(phase, out=out[:, fmap.m:])
    return out


def feature_jacobian(fmap: FeatureMap, x) -> np.ndarray:
    """d gamma / dx at a single point, shape (2m, d)."""
    x = np.asarray(x, dtype=float).reshape(fmap.d)
    phase = TWO_PI * (fmap.B @ fmap.wrap(x))
    top = -TWO_PI * np.sin(phase)[:, None] * fmap.B
    bot = TWO_PI * np.cos(phase)[:, None] * fmap.B
    return np.vstack([top, bot])


def feature_tangents_batch(fmap: FeatureMap, X: np.ndarray) -> np.ndarray:
    """Coordinate-direction tangents of gamma, shape (n, d, 2m).

    Entry [i, j, :] is the derivative of gamma at X[i] along e_j; this is the
    feature Jacobian transposed into the layout the directional sweeps of the
    differentiation kernel consume.
    """
    n = X.shape[0]
    phase = TWO_PI * (fmap.wrap(X) @ fmap.B.T)          # (n, m)
    sin_p = np.sin(phase)
    cos_p = np.cos(phase)
    T = np.empty((n, fmap.d, fmap.out_dim))
    for j in range(fmap.d):
        bj = fmap.B[:, j]
        T[:, j, : fmap.m] = -TWO_PI * sin_p * bj
        T[:, j, fmap.m:] = TWO_PI * cos_p * bj
    return T

"""Classification of converged 2D/3D fields: stripe vs droplet, bimodality.

The classifiers compare a field against idealized periodic tanh templates
whose geometry (band width, disk radius) is fixed by the field's own mean, so
the only free parameters are placement; correlation is Pearson's r over the
grid.  They are deliberately independent of the solver internals.
"""

from __future__ import annotations

import numpy as np

SQRT2 = np.sqrt(2.0)


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    a = a.ravel() - a.mean()
    b = b.ravel() - b.mean()
    denom = np.linalg.norm(a) * np.linalg.norm(b)
    if denom == 0.0:
        return 0.0
    return float(a @ b / denom)


def stripe_template(n: int, center: float, band: float, epsilon: float) -> np.ndarray:
    """Periodic 1D profile: -1 band of the given width, tanh interfaces."""
    x = np.arange(n) / n
    y = x - (center + band / 2.0)
    y -= np.round(y)                    # wrapped offset from the band midpoint
    signed = np.abs(y) - band / 2.0     # negative inside the band
    return np.tanh(signed / (SQRT2 * epsilon))


def stripe_correlation(field: np.ndarray, epsilon: float) -> tuple[float, int]:
    """Best correlation with an axis-aligned stripe; returns (r, axis).

    The minority band width is inferred from the field mean.  The template is
    swept over every grid offset along each axis; correlation covers both
    phase assignments automatically (band of -1 of width a equals band of +1
    of width 1-a up to placement).
    """
    mean = float(np.mean(field))
    band = float(np.clip((1.0 - mean) / 2.0, 0.05, 0.95))
    best, best_axis = -1.0, 0
    for axis in range(field.ndim):
        n = field.shape[axis]
        full = np.moveaxis(field, axis, 0).reshape(n, -1)
        for i in range(n):
            t = stripe_template(n, i / n, band, epsilon)
            r = _pearson(full, np.broadcast_to(t[:, None], full.shape))
            if r > best:
                best, best_axis = r, axis
    return best, best_axis


def droplet_template(shape, center, radius: float, epsilon: float, inverted: bool) -> np.ndarray:
    """Periodic 2D disk template: tanh of the signed distance to the circle."""
    axes = [np.arange(n) / n for n in shape]
    dist_sq = np.zeros(shape)
    for ax, (coords, c) in enumerate(zip(axes, center)):
        dy = coords - c
        dy -= np.round(dy)
        sl = [None] * len(shape)
        sl[ax] = slice(None)
        dist_sq = dist_sq + (dy[tuple(sl)]) ** 2
    signed = np.sqrt(dist_sq) - radius
    t = np.tanh(signed / (SQRT2 * epsilon))
    return -t if inverted else t


def droplet_correlation(field: np.ndarray, epsilon: float, refine: int = 2) -> float:
    """Best correlation with a periodic disk of the mass-consistent radius.

    Tries both phase assignments; the center is searched on a coarse grid and
    refined locally.  Only 2D fields are supported.
    """
    if field.ndim != 2:
        raise ValueError("droplet_correlation expects a 2D field")
    mean = float(np.mean(field))
    best = -1.0
    n0, n1 = field.shape
    for inverted in (False, True):
        frac = (1.0 - mean) / 2.0 if not inverted else (1.0 + mean) / 2.0
        frac = float(np.clip(frac, 0.01, 0.99))
        radius = np.sqrt(frac / np.pi)
        # coarse sweep
        step = max(1, min(n0, n1) // 16)
        candidates = [(i / n0, j / n1)
                      for i in range(0, n0, step) for j in range(0, n1, step)]
        scored = []
        for c in candidates:
            t = droplet_template(field.shape, c, radius, epsilon, inverted)
            scored.append((_pearson(field, t), c))
        scored.sort(reverse=True)
        best = max(best, scored[0][0])
        # local refinement around the best few coarse centers
        for _, (ci, cj) in scored[:3]:
            for di in range(-refine * 2, refine * 2 + 1):
                for dj in range(-refine * 2, refine * 2 + 1):
                    c = ((ci + di / n0) % 1.0, (cj + dj / n1) % 1.0)
                    t = droplet_template(field.shape, c, radius, epsilon, inverted)
                    best = max(best, _pearson(field, t))
    return best


def histogram_modes(values: np.ndarray, bins: int = 60,
                    lo: float = -1.5, hi: float = 1.5) -> tuple[float, float]:
    """Locations of the dominant histogram peak on each side of zero.

    Returns (negative-side mode, positive-side mode); a side with no mass
    reports nan.
    """
    counts, edges = np.histogram(np.clip(values, lo, hi), bins=bins, range=(lo, hi))
    centers = 0.5 * (edges[:-1] + edges[1:])
    neg = centers < 0
    pos = ~neg
    neg_mode = float(centers[neg][np.argmax(counts[neg])]) if counts[neg].any() else float("nan")
    pos_mode = float(centers[pos][np.argmax(counts[pos])]) if counts[pos].any() else float("nan")
    return neg_mode, pos_mode


def is_phase_separated(values: np.ndarray, mode_tol: float = 0.15,
                       min_side_fraction: float = 0.1) -> bool:
    """Bimodality check: a substantial peak near -1 and another near +1."""
    values = np.asarray(values).ravel()
    neg_mode, pos_mode = histogram_modes(values)
    if np.isnan(neg_mode) or np.isnan(pos_mode):
        return False
    frac_neg = float(np.mean(values < 0.0))
    return (abs(neg_mode + 1.0) <= mode_tol and abs(pos_mode - 1.0) <= mode_tol
            and min_side_fraction <= frac_neg <= 1.0 - min_side_fraction)

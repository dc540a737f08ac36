"""Independent grid-based verification path.

Everything here works on plain periodic arrays with central differences: the
discrete interface energy, its variational derivative, a mass-conserving
projected descent whose fixed points are the constrained steady states, and
closed-form sharp-interface energies from the 1D tanh profile.  None of it
shares code with the network solver, which is the point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class GridField:
    """Scalar field sampled on a uniform periodic grid over a box."""
    values: np.ndarray          # d-dimensional array
    lengths: tuple              # box edge lengths, one per axis

    def __post_init__(self):
        if self.values.ndim != len(self.lengths):
            raise ConfigurationError("GridField: lengths must match array rank")

    @property
    def spacing(self) -> tuple:
        return tuple(L / n for L, n in zip(self.lengths, self.values.shape))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def mean(self) -> float:
        return float(np.mean(self.values))


def unit_field(values: np.ndarray) -> GridField:
    """GridField on the unit box (the shipped experiment domain)."""
    values = np.asarray(values, dtype=float)
    return GridField(values=values, lengths=(1.0,) * values.ndim)


def _central_gradient_sq(f: np.ndarray, spacing) -> np.ndarray:
    out = np.zeros_like(f)
    for ax, h in enumerate(spacing):
        d = (np.roll(f, -1, axis=ax) - np.roll(f, 1, axis=ax)) / (2.0 * h)
        out += d * d
    return out


def _periodic_laplacian(f: np.ndarray, spacing) -> np.ndarray:
    out = np.zeros_like(f)
    for ax, h in enumerate(spacing):
        out += (np.roll(f, -1, axis=ax) - 2.0 * f + np.roll(f, 1, axis=ax)) / (h * h)
    return out


def discrete_energy(field: GridField, epsilon: float) -> float:
    """Cell-sum of (eps^2/2)|grad u|^2 + (u^2-1)^2/4 with periodic central differences."""
    f = field.values
    grad_sq = _central_gradient_sq(f, field.spacing)
    well = f * f - 1.0
    dens = 0.5 * epsilon * epsilon * grad_sq + 0.25 * well * well
    return field.cell_volume * float(np.sum(dens))


def variational_derivative(field: GridField, epsilon: float) -> GridField:
    """First variation of the energy: -eps^2 * laplacian(u) + u^3 - u."""
    f = field.values
    g = -epsilon * epsilon * _periodic_laplacian(f, field.spacing) + f * f * f - f
    return GridField(values=g, lengths=field.lengths)


def projected_descent(f0: GridField, epsilon: float, m0: float,
                      steps: int, dt: float) -> GridField:
    """Mass-conserving steepest descent to a constrained steady state.

    Each step removes the mean of the variational derivative before updating,
    so the field mean is conserved exactly.  The step is halved whenever the
    discrete energy would increase; persistent instability aborts.  The
    explicit-Euler stability guard dt <= h^2 / (4 eps^2) is enforced by
    clamping.

    Note: callers should shift f0 so mean(f0) = m0; the descent preserves
    whatever mean it starts from.
    """
    h_min = min(f0.spacing)
    dt = min(dt, h_min * h_min / (4.0 * epsilon * epsilon))
    f = f0.values.copy()
    lengths = f0.lengths
    energy = discrete_energy(GridField(f, lengths), epsilon)
    for step in range(steps):
        g = variational_derivative(GridField(f, lengths), epsilon).values
        g -= np.mean(g)
        for _ in range(40):
            trial = f - dt * g
            e_trial = discrete_energy(GridField(trial, lengths), epsilon)
            if e_trial <= energy:
                break
            dt *= 0.5
        else:
            raise RuntimeError(
                f"projected descent unstable at step {step}: energy {energy:.6g}, "
                f"dt shrunk to {dt:.3g} without decrease"
            )
        f = trial
        energy = e_trial
    return GridField(values=f, lengths=lengths)


def interface_tension(epsilon: float) -> float:
    """Energy per unit interface area of the 1D profile tanh(x / (sqrt(2) eps))."""
    return (2.0 * SQRT2 / 3.0) * epsilon


def sharp_interface_energy(pattern: str, epsilon: float, m0: float = 0.0) -> float:
    """Closed-form small-eps energy of canonical patterns on the unit box.

    lamellar: a straight band costs two flat interfaces crossing the box.
    droplet2d: a disk of the minority phase with area set by the mass, costing
    perimeter times the line tension.
    """
    sigma = interface_tension(epsilon)
    if pattern == "lamellar":
        return 2.0 * sigma
    if pattern == "droplet2d":
        if not 0.0 < m0 < 1.0:
            raise ConfigurationError("droplet2d needs 0 < m0 < 1")
        area = (1.0 - m0) / 2.0
        r = np.sqrt(area / np.pi)
        return sigma * 2.0 * np.pi * r
    raise ConfigurationError(f"unknown pattern {pattern!r}")


def two_interface_profile(n: int, epsilon: float, m0: float) -> GridField:
    """1D band of the -1 phase in a +1 background, tanh interfaces, mean ~ m0.

    Used as the descent initializer for the nontrivial 1D steady state; the
    band width (1 - m0)/2 fixes the mass, and a constant shift removes the
    tanh-tail residual so the mean is exactly m0.
    """
    width = (1.0 - m0) / 2.0
    x = np.arange(n) / n
    x1, x2 = 0.5 - width / 2.0, 0.5 + width / 2.0
    f = 1.0 - np.tanh((x - x1) / (SQRT2 * epsilon)) + np.tanh((x - x2) / (SQRT2 * epsilon))
    f += m0 - np.mean(f)
    return unit_field(f)

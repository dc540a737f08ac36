"""Training orchestration: nested inner/outer loops with multiplier updates.

One run executes K outer cycles of T full-batch Adam epochs on the augmented
objective, updates the multiplier and penalty between cycles, then hands the
final parameters to L-BFGS on the same fixed batches.  Field snapshots on a
uniform grid feed the successive-iterate convergence metric.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from .autodiff import BatchSet, eval_values, loss_breakdown, loss_gradient
from .errors import ConfigurationError, DivergedError
from .features import FeatureMap, build_feature_map
from .loss import LossBreakdown, LossSpec
from .network import Architecture, NetParams, init_network
from .optim import AdamState, LbfgsConfig, LbfgsResult, adam_step, lbfgs_refine
from .sampling import PointBatch, grid_batch, sobol_batch


@dataclass(frozen=True)
class ALState:
    """Multiplier/penalty state of the augmented objective."""
    lam: float
    mu: float
    mu_max: float
    rho: float
    freeze_outer: int = 2

    def __post_init__(self):
        if not (0.0 < self.mu <= self.mu_max) or self.rho <= 1.0:
            raise ConfigurationError(f"invalid ALState {self!r}")


def update_multiplier(al: ALState, c: float, outer_index: int) -> ALState:
    """End-of-cycle update: lam += mu*c (frozen at zero early), mu grows to its cap."""
    lam = 0.0 if outer_index < al.freeze_outer else al.lam + al.mu * c
    mu = min(al.rho * al.mu, al.mu_max)
    return replace(al, lam=lam, mu=mu)


@dataclass(frozen=True)
class RunConfig:
    dimension: int
    epsilon: float
    m0: float
    lo: tuple | None = None
    hi: tuple | None = None
    # feature lift
    fmap_kind: str = "none"
    f_m: int | None = None
    m_rff: int | None = None
    fmap_scale: float | None = None
    wrap_inputs: bool = True
    # network
    width: int = 100
    n_blocks: int = 3
    # training
    mode: str = "ffm"                    # "ffm" | "penalty"
    alpha: float = 0.0
    outer_cycles: int = 5
    inner_epochs: int = 100
    lr: float = 1e-3
    seed: int = 0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    # collocation
    energy_sampling: str = "sobol"       # "sobol" | "grid"
    energy_batch: int = 4096             # total points (sobol) or per-dim (grid)
    include_right_edge: bool = True      # grid sampling only
    mass_batch: int | None = None        # defaults to the energy batch size
    boundary_points: int = 101           # per-axis pair count in penalty mode
    # augmented-Lagrangian parameters
    lambda0: float = 0.0
    mu0: float = 1.0
    rho: float = 1.2
    mu_max: float = 2.0
    freeze_outer: int = 2
    # refinement
    lbfgs_memory: int = 10
    lbfgs_max_iters: int = 500
    lbfgs_grad_tol: float = 1e-8
    # diagnostics
    snapshot_resolution: int = 0         # 0 picks 256 / 128 / 64 by dimension

    def __post_init__(self):
        if self.outer_cycles < 1 or self.inner_epochs < 0:
            raise ConfigurationError("need outer_cycles >= 1 and inner_epochs >= 0")
        if self.epsilon <= 0:
            raise ConfigurationError("need epsilon > 0")
        if self.mode not in ("ffm", "penalty"):
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        if self.mode == "penalty" and self.fmap_kind in ("cartesian", "separable", "hybrid"):
            raise ConfigurationError(
                "penalty mode with an exactly periodic feature map is contradictory"
            )
        if self.mode == "ffm" and self.fmap_kind == "none":
            raise ConfigurationError("ffm mode needs a feature map kind")

    @property
    def domain(self) -> tuple:
        lo = self.lo if self.lo is not None else (0.0,) * self.dimension
        hi = self.hi if self.hi is not None else (1.0,) * self.dimension
        return tuple((float(a), float(b)) for a, b in zip(lo, hi))

    @property
    def volume(self) -> float:
        return float(np.prod([b - a for a, b in self.domain]))

    @property
    def periods(self) -> tuple:
        return tuple(b - a for a, b in self.domain)

    @property
    def grid_resolution(self) -> int:
        if self.snapshot_resolution:
            return self.snapshot_resolution
        return {1: 256, 2: 128, 3: 64}[self.dimension]


@dataclass(frozen=True)
class FieldSnapshot:
    grid: PointBatch
    values: np.ndarray
    epoch: int

    def as_array(self, n_per_dim: int) -> np.ndarray:
        d = self.grid.d
        return self.values.reshape((n_per_dim,) * d)


def snapshot(params: NetParams, fmap: FeatureMap | None, grid: PointBatch,
             epoch: int = 0) -> FieldSnapshot:
    values = eval_values(params, fmap, grid.points)
    return FieldSnapshot(grid=grid, values=values, epoch=epoch)


def successive_error(a: FieldSnapshot, b: FieldSnapshot) -> float:
    """L2 distance between two snapshots: sqrt(volume * mean((a-b)^2))."""
    if a.grid.points.shape != b.grid.points.shape or a.grid.domain != b.grid.domain:
        raise ConfigurationError("successive_error: snapshot grids differ")
    diff = a.values - b.values
    return float(np.sqrt(a.grid.volume * np.mean(diff * diff)))


@dataclass
class TrainResult:
    params: NetParams
    fmap: FeatureMap | None
    config: RunConfig
    loss_history: list                   # one LossBreakdown per Adam epoch
    error_history: list                  # (epoch, successive error) per snapshot
    outer_constraints: list              # constraint c at the end of each cycle
    final_breakdown: LossBreakdown
    final_al: ALState
    lbfgs: LbfgsResult | None
    snapshots: list
    wall_time: float
    converged: bool

    @property
    def final_snapshot(self) -> FieldSnapshot:
        return self.snapshots[-1]


def build_feature_map_for(cfg: RunConfig) -> FeatureMap | None:
    return build_feature_map(
        cfg.fmap_kind, cfg.dimension, cfg.periods,
        f_m=cfg.f_m, m_rff=cfg.m_rff, s=cfg.fmap_scale,
        seed=cfg.seed * 2 + 1, wrap_inputs=cfg.wrap_inputs,
    )


def _boundary_pairs(cfg: RunConfig) -> np.ndarray:
    """Matched periodic face points: for each axis, n points paired across it."""
    dom = cfg.domain
    d = cfg.dimension
    if d == 1:
        (lo, hi), = dom
        return np.array([[[lo], [hi]]])
    pairs = []
    n = cfg.boundary_points
    for axis in range(d):
        face_axes = [np.linspace(dom[j][0], dom[j][1], n) for j in range(d) if j != axis]
        mesh = np.meshgrid(*face_axes, indexing="ij")
        face = np.stack([m.ravel() for m in mesh], axis=1)
        a = np.insert(face, axis, dom[axis][0], axis=1)
        b = np.insert(face, axis, dom[axis][1], axis=1)
        pairs.append(np.stack([a, b], axis=1))
    return np.concatenate(pairs, axis=0)


def build_batches(cfg: RunConfig) -> BatchSet:
    dom = cfg.domain
    if cfg.energy_sampling == "grid":
        energy = grid_batch(cfg.energy_batch, cfg.dimension, dom,
                            include_right_edge=cfg.include_right_edge)
    elif cfg.energy_sampling == "sobol":
        energy = sobol_batch(cfg.energy_batch, cfg.dimension, skip=1, domain=dom)
    else:
        raise ConfigurationError(f"unknown energy_sampling {cfg.energy_sampling!r}")
    n_mass = cfg.mass_batch if cfg.mass_batch is not None else energy.n
    # the mass batch continues the sequence past the energy window so the two
    # quadratures are decoupled
    mass = sobol_batch(n_mass, cfg.dimension, skip=1 + energy.n, domain=dom)
    pairs = _boundary_pairs(cfg) if cfg.mode == "penalty" else None
    return BatchSet(energy=energy, mass=mass, boundary_pairs=pairs)


def snapshot_grid(cfg: RunConfig) -> PointBatch:
    return grid_batch(cfg.grid_resolution, cfg.dimension, cfg.domain,
                      include_right_edge=False)


def train(cfg: RunConfig, log=None) -> TrainResult:
    """Run the full optimization; deterministic given the config (seed included)."""
    t_start = time.perf_counter()
    fmap = build_feature_map_for(cfg)
    input_dim = fmap.out_dim if fmap is not None else cfg.dimension
    arch = Architecture(input_dim=input_dim, width=cfg.width, n_blocks=cfg.n_blocks)
    params = init_network(arch, cfg.seed)
    batches = build_batches(cfg)
    spec = LossSpec(epsilon=cfg.epsilon, m0=cfg.m0, alpha=cfg.alpha, volume=cfg.volume)
    al = ALState(lam=cfg.lambda0, mu=cfg.mu0, mu_max=cfg.mu_max,
                 rho=cfg.rho, freeze_outer=cfg.freeze_outer)
    grid = snapshot_grid(cfg)

    adam = AdamState.fresh(params.flat.size, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)
    theta = params.flat
    loss_history: list[LossBreakdown] = []
    error_history: list[tuple[int, float]] = []
    outer_constraints: list[float] = []
    snaps = [snapshot(params, fmap, grid, epoch=0)]
    epoch = 0

    def partial_result(bd, conv):
        return TrainResult(
            params=params.with_flat(theta), fmap=fmap, config=cfg,
            loss_history=loss_history, error_history=error_history,
            outer_constraints=outer_constraints, final_breakdown=bd,
            final_al=al, lbfgs=None, snapshots=snaps,
            wall_time=time.perf_counter() - t_start, converged=conv,
        )

    for k in range(cfg.outer_cycles):
        for _ in range(cfg.inner_epochs):
            try:
                bd, grad = loss_gradient(spec, al, params.with_flat(theta), fmap, batches)
            except DivergedError as err:
                err.partial = partial_result(loss_history[-1] if loss_history else None, False)
                raise
            loss_history.append(bd)
            theta, adam = adam_step(adam, theta, grad, cfg.lr)
            epoch += 1
        current = params.with_flat(theta)
        bd = loss_breakdown(spec, al, current, fmap, batches)
        outer_constraints.append(bd.constraint)
        al = update_multiplier(al, bd.constraint, k)
        snaps.append(snapshot(current, fmap, grid, epoch=epoch))
        error_history.append((epoch, successive_error(snaps[-1], snaps[-2])))
        if log:
            log(f"cycle {k + 1}/{cfg.outer_cycles}: total {bd.total:.6f} "
                f"energy {bd.energy:.6f} |c| {abs(bd.constraint):.2e} "
                f"lambda {al.lam:.4f} mu {al.mu:.3f}")

    # quasi-Newton refinement on the same fixed batches, multiplier frozen
    lbfgs_cfg = LbfgsConfig(memory=cfg.lbfgs_memory, max_iters=cfg.lbfgs_max_iters,
                            grad_tol=cfg.lbfgs_grad_tol)

    def objective(flat):
        bd_, grad_ = loss_gradient(spec, al, params.with_flat(flat), fmap, batches)
        return bd_.total, grad_

    lb = lbfgs_refine(objective, theta, lbfgs_cfg)
    theta = lb.params
    final_params = params.with_flat(theta)
    final_bd = loss_breakdown(spec, al, final_params, fmap, batches)
    snaps.append(snapshot(final_params, fmap, grid, epoch=epoch + lb.n_iters))
    error_history.append((epoch + lb.n_iters, successive_error(snaps[-1], snaps[-2])))
    converged = abs(final_bd.constraint) <= 1e-3
    if log:
        log(f"refined: total {final_bd.total:.6f} energy {final_bd.energy:.6f} "
            f"|c| {abs(final_bd.constraint):.2e} ({lb.n_iters} iterations)")

    return TrainResult(
        params=final_params, fmap=fmap, config=cfg,
        loss_history=loss_history, error_history=error_history,
        outer_constraints=outer_constraints, final_breakdown=final_bd,
        final_al=al, lbfgs=lb, snapshots=snaps,
        wall_time=time.perf_counter() - t_start, converged=converged,
    )

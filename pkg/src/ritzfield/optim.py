"""Minimizers over the flat parameter vector: Adam and L-BFGS.

Both are deterministic functions of their inputs.  L-BFGS is the classic
two-loop recursion with a strong-Wolfe line search (bracket + zoom with cubic
interpolation) and is meant to run on a fixed quadrature batch, where the
objective is an exact deterministic function of the parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DivergedError


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps_hat: float = 1e-8

    @classmethod
    def fresh(cls, n: int, beta1: float = 0.9, beta2: float = 0.999,
              eps_hat: float = 1e-8) -> "AdamState":
        return cls(m=np.zeros(n), v=np.zeros(n), t=0,
                   beta1=beta1, beta2=beta2, eps_hat=eps_hat)


def adam_step(state: AdamState, params: np.ndarray, grad: np.ndarray, lr: float):
    """One bias-corrected Adam update; returns (new_params, new_state)."""
    if params.shape != grad.shape or params.shape != state.m.shape:
        raise ValueError("adam_step: mismatched parameter/gradient lengths")
    if not np.all(np.isfinite(grad)):
        raise DivergedError("gradient", "non-finite gradient in adam_step")
    t = state.t + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    m_hat = m / (1.0 - state.beta1 ** t)
    v_hat = v / (1.0 - state.beta2 ** t)
    new_params = params - lr * m_hat / (np.sqrt(v_hat) + state.eps_hat)
    return new_params, AdamState(m=m, v=v, t=t, beta1=state.beta1,
                                 beta2=state.beta2, eps_hat=state.eps_hat)


@dataclass(frozen=True)
class LbfgsConfig:
    memory: int = 10
    max_iters: int = 500
    grad_tol: float = 1e-8
    wolfe_c1: float = 1e-4
    wolfe_c2: float = 0.9

    def __post_init__(self):
        if self.memory < 1 or not (0.0 < self.wolfe_c1 < self.wolfe_c2 < 1.0):
            raise ValueError(f"invalid LbfgsConfig {self!r}")


@dataclass
class LbfgsResult:
    params: np.ndarray
    value: float
    n_iters: int
    converged: bool                 # hit grad_tol
    line_search_failed: bool


def _cubic_min(a, fa, ga, b, fb, gb):
    """Minimizer of the cubic interpolant on [a, b]; None if degenerate."""
    with np.errstate(over="ignore", invalid="ignore"):
        d1 = ga + gb - 3.0 * (fa - fb) / (a - b)
        disc = d1 * d1 - ga * gb
        if not np.isfinite(disc) or disc < 0.0:
            return None
        d2 = np.sign(b - a) * np.sqrt(disc)
        denom = gb - ga + 2.0 * d2
        if denom == 0.0:
            return None
        x = b - (b - a) * (gb + d2 - d1) / denom
    return x if np.isfinite(x) else None


def _zoom(phi, a_lo, f_lo, g_lo, a_hi, f_hi, g_hi, f0, g0, c1, c2, max_iter=30):
    for _ in range(max_iter):
        a = _cubic_min(a_lo, f_lo, g_lo, a_hi, f_hi, g_hi)
        lo, hi = min(a_lo, a_hi), max(a_lo, a_hi)
        margin = 0.1 * (hi - lo)
        if a is None or not (lo + margin <= a <= hi - margin):
            a = 0.5 * (a_lo + a_hi)
        fa, ga = phi(a)
        if fa > f0 + c1 * a * g0 or fa >= f_lo:
            a_hi, f_hi, g_hi = a, fa, ga
        else:
            if abs(ga) <= -c2 * g0:
                return a, fa, ga
            if ga * (a_hi - a_lo) >= 0.0:
                a_hi, f_hi, g_hi = a_lo, f_lo, g_lo
            a_lo, f_lo, g_lo = a, fa, ga
        if abs(a_hi - a_lo) < 1e-14 * max(1.0, abs(a_lo)):
            break
    return None


def _strong_wolfe(phi, f0, g0, c1, c2, alpha0=1.0, alpha_max=1e6, max_iter=25):
    """Find alpha satisfying the strong Wolfe conditions for phi(a) = f(x + a p).

    phi returns (value, directional derivative).  Returns (alpha, f, g) or
    None on failure.  g0 must be negative (descent direction).
    """
    a_prev, f_prev, g_prev = 0.0, f0, g0
    a = alpha0
    for i in range(max_iter):
        fa, ga = phi(a)
        if not np.isfinite(fa):
            # retreat into the bracketable region
            a = 0.5 * (a_prev + a)
            continue
        if fa > f0 + c1 * a * g0 or (i > 0 and fa >= f_prev):
            return _zoom(phi, a_prev, f_prev, g_prev, a, fa, ga, f0, g0, c1, c2)
        if abs(ga) <= -c2 * g0:
            return a, fa, ga
        if ga >= 0.0:
            return _zoom(phi, a, fa, ga, a_prev, f_prev, g_prev, f0, g0, c1, c2)
        a_prev, f_prev, g_prev = a, fa, ga
        a = min(2.0 * a, alpha_max)
    return None


def lbfgs_refine(objective, params: np.ndarray, cfg: LbfgsConfig) -> LbfgsResult:
    """Two-loop L-BFGS minimization of objective(theta) -> (value, grad).

    Terminates on the sup-norm gradient tolerance, the iteration cap, or a
    failed line search; the best visited point is returned, so the result is
    never worse than the input.
    """
    x = np.asarray(params, dtype=float).copy()
    f, g = objective(x)
    if not np.isfinite(f):
        raise DivergedError("objective", "non-finite initial value in lbfgs_refine")
    best_x, best_f = x.copy(), f
    s_list: list[np.ndarray] = []
    y_list: list[np.ndarray] = []
    rho_list: list[float] = []
    gamma = 1.0
    ls_failed = False
    it = 0
    while it < cfg.max_iters:
        if np.max(np.abs(g)) < cfg.grad_tol:
            return LbfgsResult(best_x, best_f, it, True, False)

        # two-loop recursion for the search direction
        q = g.copy()
        alphas = []
        for s, y, rho in zip(reversed(s_list), reversed(y_list), reversed(rho_list)):
            a = rho * (s @ q)
            alphas.append(a)
            q -= a * y
        q *= gamma
        for (s, y, rho), a in zip(zip(s_list, y_list, rho_list), reversed(alphas)):
            b = rho * (y @ q)
            q += (a - b) * s
        p = -q
        dg = g @ p
        if dg >= 0.0:      # stale curvature produced an ascent direction; reset
            s_list.clear(); y_list.clear(); rho_list.clear()
            p = -g
            dg = g @ p

        def phi(a, _x=x, _p=p):
            fa, ga = objective(_x + a * _p)
            return fa, ga @ _p

        hit = _strong_wolfe(phi, f, dg, cfg.wolfe_c1, cfg.wolfe_c2)
        if hit is None and s_list:
            # curvature memory may be poisoned (the objective is C1 but not
            # C2); drop it and retry along steepest descent before giving up
            s_list.clear(); y_list.clear(); rho_list.clear()
            gamma = 1.0
            p = -g
            dg = g @ p
            gnorm = np.linalg.norm(g)
            alpha0 = min(1.0, 1.0 / gnorm) if gnorm > 0 else 1.0

            def phi_sd(a, _x=x, _p=p):
                fa, ga = objective(_x + a * _p)
                return fa, ga @ _p

            hit = _strong_wolfe(phi_sd, f, dg, cfg.wolfe_c1, cfg.wolfe_c2,
                                alpha0=alpha0)
            phi = phi_sd
        if hit is None:
            ls_failed = True
            break
        alpha, f_new, _ = hit
        x_new = x + alpha * p
        _, g_new = objective(x_new)
        s = x_new - x
        y = g_new - g
        sy = s @ y
        if sy > 1e-10 * np.linalg.norm(s) * np.linalg.norm(y):
            s_list.append(s); y_list.append(y); rho_list.append(1.0 / sy)
            if len(s_list) > cfg.memory:
                s_list.pop(0); y_list.pop(0); rho_list.pop(0)
            gamma = sy / (y @ y)
        x, f, g = x_new, f_new, g_new
        if f < best_f:
            best_x, best_f = x.copy(), f
        it += 1
    return LbfgsResult(best_x, best_f, it, False, ls_failed)

"""Mixed-mode differentiation kernel for the field network.

Spatial gradients are computed by forward-mode directional sweeps, one per
coordinate (d <= 3, so the tangent streams cost at most 3x a plain pass).
Parameter gradients come from a hand-written reverse pass recorded over the
whole composite computation, tangent sweeps included, so losses that depend
on |grad u|^2 differentiate exactly (no finite differences anywhere).

Everything is float64 and batched; points are processed in fixed-size chunks
reduced in order, so results are bit-reproducible for identical inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DivergedError
from .features import FeatureMap, apply_features_batch, feature_tangents_batch
from .loss import LossBreakdown, LossSpec, energy_density
from .network import NetParams, act_d1, act_d2, act_value, n_params
from .sampling import PointBatch

CHUNK = 4096


@dataclass(frozen=True)
class EvalResult:
    values: np.ndarray          # (n,)
    spatial_grads: np.ndarray   # (n, d)


@dataclass(frozen=True)
class BatchSet:
    """Fixed collocation batches one training step consumes."""
    energy: PointBatch
    mass: PointBatch
    boundary_pairs: np.ndarray | None = None    # (p, 2, d) matched periodic points


def _check_shapes(params: NetParams, fmap: FeatureMap | None, d: int) -> None:
    expect = fmap.out_dim if fmap is not None else d
    if params.arch.input_dim != expect:
        raise ConfigurationError(
            f"network input_dim {params.arch.input_dim} does not match "
            f"{'feature dim ' + str(fmap.out_dim) if fmap is not None else 'point dim ' + str(d)}"
        )
    if fmap is not None and fmap.d != d:
        raise ConfigurationError(f"feature map is {fmap.d}-dimensional, points are {d}-dimensional")


def _lift(params: NetParams, fmap: FeatureMap | None, X: np.ndarray, need_spatial: bool):
    """Network input P (n, F) and, if asked, its coordinate tangents (n, d, F)."""
    n, d = X.shape
    if fmap is None:
        P = np.ascontiguousarray(X)
        T = None
        if need_spatial:
            T = np.broadcast_to(np.eye(d), (n, d, d)).copy()
        return P, T
    P = apply_features_batch(fmap, X)
    T = feature_tangents_batch(fmap, X) if need_spatial else None
    return P, T


def _forward(params: NetParams, P: np.ndarray, T: np.ndarray | None):
    """Forward pass over the lifted batch; returns (u, g, cache).

    When T is None the tangent streams are skipped and g is None.  The cache
    keeps, per block, the block input and inner pre-activation together with
    their tangents; activation values/derivatives are recomputed on the
    reverse pass (cheap next to the matmuls).
    """
    n = P.shape[0]
    need_spatial = T is not None
    d = T.shape[1] if need_spatial else 0

    z = P
    dz = T
    blocks_cache = []
    for k, (scale, W1, b1, W2, b2) in enumerate(params.blocks):
        sc = scale[0]
        a = act_value(z)
        s = a @ W1.T + b1
        t = act_value(s)
        rw = t @ W2.T
        r = sc * rw + b2
        if need_spatial:
            da = act_d1(z)[:, None, :] * dz
            ds = (da.reshape(n * d, -1) @ W1.T).reshape(n, d, -1)
            dt = act_d1(s)[:, None, :] * ds
            drw = (dt.reshape(n * d, -1) @ W2.T).reshape(n, d, -1)
            dr = sc * drw
        else:
            ds = drw = dr = None
        blocks_cache.append((z, s, dz, ds, rw, drw))
        if k == 0:
            z, dz = r, dr
        else:
            z = z + r
            if need_spatial:
                dz = dz + dr

    u = params.beta1 * (P @ params.w) + params.beta2 + z @ params.head_w + params.head_b
    g = None
    if need_spatial:
        g = params.beta1 * (T.reshape(n * d, -1) @ params.w).reshape(n, d) \
            + (dz.reshape(n * d, -1) @ params.head_w).reshape(n, d)
    cache = (P, T, blocks_cache, z, dz)
    return u, g, cache


def _backward(params: NetParams, cache, bar_u: np.ndarray, bar_g: np.ndarray | None,
              out: np.ndarray) -> None:
    """Accumulate d(loss)/d(theta) into the flat vector ``out``.

    bar_u / bar_g are the loss cotangents of the values and spatial gradients.
    The pass mirrors _forward exactly, including the tangent streams, so the
    |grad u|^2 pathway is differentiated through act'' as well.
    """
    P, T, blocks_cache, zK, dzK = cache
    n = P.shape[0]
    need_spatial = bar_g is not None
    d = T.shape[1] if need_spatial else 0
    grads = NetParams(params.arch, out)        # zero-copy views into out

    # head: u += zK.head_w + head_b ; g_j += dzK_j.head_w
    gh = zK.T @ bar_u
    if need_spatial:
        gh += dzK.reshape(n * d, -1).T @ bar_g.reshape(n * d)
    grads.head_w[:] += gh
    out[-1] += bar_u.sum()
    cz = bar_u[:, None] * params.head_w
    cdz = bar_g[:, :, None] * params.head_w if need_spatial else None

    # bypass: u += beta1*(P.w) + beta2 ; g_j += beta1*(T_j.w)
    Pw = P @ params.w
    out[0] += bar_u @ Pw
    out[1] += bar_u.sum()
    gw = P.T @ bar_u
    if need_spatial:
        Tw = (T.reshape(n * d, -1) @ params.w).reshape(n, d)
        out[0] += float(np.sum(bar_g * Tw))
        gw = gw + T.reshape(n * d, -1).T @ bar_g.reshape(n * d)
    grads.w[:] += params.beta1 * gw

    for k in range(params.arch.n_blocks - 1, -1, -1):
        scale, W1, b1, W2, b2 = params.blocks[k]
        gscale, gW1, gb1, gW2, gb2 = grads.blocks[k]
        z, s, dz, ds, rw, drw = blocks_cache[k]
        sc = scale[0]
        first = k == 0

        a = act_value(z)
        t = act_value(s)
        s1 = act_d1(s)

        cr = cz                                   # residual add: cotangent passes through
        gscale += np.sum(cr * rw)
        ct = sc * (cr @ W2)
        gW2 += sc * (cr.T @ t)
        gb2 += cr.sum(axis=0)
        cs = s1 * ct
        if need_spatial:
            cdr = cdz
            gscale += np.sum(cdr * drw)
            cdt = sc * (cdr.reshape(n * d, -1) @ W2).reshape(n, d, -1)
            dt = s1[:, None, :] * ds
            gW2 += sc * (cdr.reshape(n * d, -1).T @ dt.reshape(n * d, -1))
            cs += act_d2(s) * np.sum(ds * cdt, axis=1)
            cds = s1[:, None, :] * cdt

        gW1 += cs.T @ a
        gb1 += cs.sum(axis=0)
        if need_spatial:
            da = act_d1(z)[:, None, :] * dz
            gW1 += cds.reshape(n * d, -1).T @ da.reshape(n * d, -1)

        if first:
            break                                 # block input is the fixed lift
        ca = cs @ W1
        z1 = act_d1(z)
        new_cz = z1 * ca + cz                     # skip connection
        if need_spatial:
            cda = (cds.reshape(n * d, -1) @ W1).reshape(n, d, -1)
            new_cz += act_d2(z) * np.sum(dz * cda, axis=1)
            cdz = z1[:, None, :] * cda + cdz
        cz = new_cz


def eval_values(params: NetParams, fmap: FeatureMap | None, X: np.ndarray,
                chunk: int = CHUNK) -> np.ndarray:
    """u at each row of X, no gradients."""
    X = np.asarray(X, dtype=float)
    _check_shapes(params, fmap, X.shape[1])
    out = np.empty(X.shape[0])
    for lo in range(0, X.shape[0], chunk):
        hi = min(lo + chunk, X.shape[0])
        P, _ = _lift(params, fmap, X[lo:hi], need_spatial=False)
        u, _, _ = _forward(params, P, None)
        out[lo:hi] = u
    return out


def eval_batch(params: NetParams, fmap: FeatureMap | None, batch: PointBatch,
               chunk: int = CHUNK) -> EvalResult:
    """Values and exact spatial gradients over a point batch."""
    X = np.asarray(batch.points, dtype=float)
    n, d = X.shape
    _check_shapes(params, fmap, d)
    values = np.empty(n)
    grads = np.empty((n, d))
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        P, T = _lift(params, fmap, X[lo:hi], need_spatial=True)
        u, g, _ = _forward(params, P, T)
        values[lo:hi] = u
        grads[lo:hi] = g
    return EvalResult(values=values, spatial_grads=grads)


def _pair_values(params, fmap, pairs, chunk):
    p = pairs.shape[0]
    flat = pairs.reshape(2 * p, pairs.shape[2])
    u = eval_values(params, fmap, flat, chunk)
    u = u.reshape(p, 2)
    return u[:, 0] - u[:, 1]


def loss_breakdown(spec: LossSpec, al, params: NetParams, fmap: FeatureMap | None,
                   batches: BatchSet, chunk: int = CHUNK) -> LossBreakdown:
    """All loss terms at the current parameters (no gradient)."""
    res = eval_batch(params, fmap, batches.energy, chunk)
    energy = spec.volume * float(np.mean(energy_density(res.values, res.spatial_grads, spec.epsilon)))
    u_mass = eval_values(params, fmap, batches.mass.points, chunk)
    mean_u = spec.volume * float(np.mean(u_mass))
    c = mean_u - spec.m0
    mass = al.lam * c + 0.5 * al.mu * c * c
    boundary = 0.0
    if batches.boundary_pairs is not None:
        diff = _pair_values(params, fmap, batches.boundary_pairs, chunk)
        boundary = float(np.mean(diff * diff))
    return LossBreakdown(energy=energy, mass=mass, boundary=boundary,
                         total=energy + mass + spec.alpha * boundary,
                         mean_u=mean_u, constraint=c)


def loss_gradient(spec: LossSpec, al, params: NetParams, fmap: FeatureMap | None,
                  batches: BatchSet, chunk: int = CHUNK):
    """Loss terms and the exact gradient of the total w.r.t. every parameter.

    Returns (LossBreakdown, flat gradient).  Raises DivergedError naming the
    offending term if any contribution is non-finite.
    """
    d = batches.energy.d
    _check_shapes(params, fmap, d)
    grad = np.zeros(n_params(params.arch))
    V = spec.volume

    # interface-energy batch: values and spatial tangents, full reverse pass
    Xe = batches.energy.points
    ne = Xe.shape[0]
    energy_sum = 0.0
    for lo in range(0, ne, chunk):
        hi = min(lo + chunk, ne)
        P, T = _lift(params, fmap, Xe[lo:hi], need_spatial=True)
        u, g, cache = _forward(params, P, T)
        energy_sum += float(np.sum(energy_density(u, g, spec.epsilon)))
        bar_u = (V / ne) * (u * u * u - u)
        bar_g = (V * spec.epsilon * spec.epsilon / ne) * g
        _backward(params, cache, bar_u, bar_g, grad)
    energy = V * energy_sum / ne

    # mass batch: values only; the constraint couples all points through the
    # mean, so the cotangent seed needs the full mean first (two passes keeps
    # memory at one chunk's worth of cache)
    Xm = batches.mass.points
    nm = Xm.shape[0]
    mean_u = V * float(np.mean(eval_values(params, fmap, Xm, chunk)))
    c = mean_u - spec.m0
    mass = al.lam * c + 0.5 * al.mu * c * c
    seed = (al.lam + al.mu * c) * V / nm
    if seed != 0.0:
        for lo in range(0, nm, chunk):
            hi = min(lo + chunk, nm)
            P, _ = _lift(params, fmap, Xm[lo:hi], need_spatial=False)
            _, _, cache = _forward(params, P, None)
            _backward(params, cache, np.full(hi - lo, seed), None, grad)

    # boundary pairs: values only, antisymmetric seeds
    boundary = 0.0
    if batches.boundary_pairs is not None and spec.alpha != 0.0:
        pairs = batches.boundary_pairs
        p = pairs.shape[0]
        flatX = pairs.reshape(2 * p, pairs.shape[2])
        P, _ = _lift(params, fmap, flatX, need_spatial=False)
        u, _, cache = _forward(params, P, None)
        diff = u.reshape(p, 2)[:, 0] - u.reshape(p, 2)[:, 1]
        boundary = float(np.mean(diff * diff))
        bar = np.empty(2 * p)
        bar[0::2] = 2.0 * spec.alpha * diff / p
        bar[1::2] = -2.0 * spec.alpha * diff / p
        _backward(params, cache, bar, None, grad)
    elif batches.boundary_pairs is not None:
        diff = _pair_values(params, fmap, batches.boundary_pairs, chunk)
        boundary = float(np.mean(diff * diff))

    for name, val in (("energy", energy), ("mass", mass), ("boundary", boundary)):
        if not np.isfinite(val):
            raise DivergedError(name)
    breakdown = LossBreakdown(energy=energy, mass=mass, boundary=boundary,
                              total=energy + mass + spec.alpha * boundary,
                              mean_u=mean_u, constraint=c)
    return breakdown, grad


def fd_gradient_error(f, theta: np.ndarray, analytic: np.ndarray,
                      indices, h: float) -> float:
    """Max relative error of ``analytic`` vs central differences of ``f``.

    Relative error is |a - fd| / max(1, |a|); returns inf if any probe of f
    comes back non-finite.
    """
    worst = 0.0
    for i in indices:
        theta_p = theta.copy(); theta_p[i] += h
        theta_m = theta.copy(); theta_m[i] -= h
        fp, fm = f(theta_p), f(theta_m)
        if not (np.isfinite(fp) and np.isfinite(fm)):
            return float("inf")
        fd = (fp - fm) / (2.0 * h)
        err = abs(analytic[i] - fd) / max(1.0, abs(analytic[i]))
        worst = max(worst, err)
    return worst


def gradcheck(spec: LossSpec, al, params: NetParams, fmap: FeatureMap | None,
              batches: BatchSet, h: float = 1e-5, sample: int = 32,
              seed: int = 0) -> float:
    """Check the analytic parameter gradient of the total loss against
    central finite differences on a random parameter subset (>= 32)."""
    if h <= 0:
        raise ConfigurationError("need h > 0")
    breakdown, grad = loss_gradient(spec, al, params, fmap, batches)
    rng = np.random.default_rng(seed)
    total = grad.size
    k = min(total, max(32, sample))
    indices = rng.choice(total, size=k, replace=False)

    def f(theta):
        p = params.with_flat(theta)
        try:
            b = loss_breakdown(spec, al, p, fmap, batches)
        except DivergedError:
            return float("nan")
        return b.total

    return fd_gradient_error(f, params.flat, grad, indices, h)

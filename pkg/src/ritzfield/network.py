"""Residual network with a trainable global linear bypass.

The field is parameterized as

    u(p) = beta1 * w.p + beta2 + N(p)

where p is the network input (the feature lift of x when one is active, raw
coordinates otherwise) and N is a stack of two-layer residual blocks followed
by a scalar head.  Each width-matching block computes

    out = in + scale * (W2 @ act(W1 @ act(in) + b1)) + b2

with activation act(z) = max(z, 0)^1.5.  The first block maps the input
dimension up to the working width and carries no skip connection.

The trainable per-block branch scale (initialized small) is load-bearing:
act has gain 1.5 above unit scale, so an unscaled residual stack under
variance-2/fan initialization amplifies itself block over block and starts
training from fields tens of units tall.  Scaling the branch down keeps the
initial field a small perturbation of the global linear map while leaving
every weight matrix at its standard initialization.

All trainable scalars live in one flat float64 vector with a fixed layout
(bypass scalars, bypass weights, block scale/weights/biases in order, head);
the structured views below are zero-copy slices of that vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class Architecture:
    input_dim: int
    width: int = 100
    n_blocks: int = 3

    def __post_init__(self):
        if self.input_dim < 1 or self.width < 1 or self.n_blocks < 1:
            raise ConfigurationError(f"invalid architecture {self!r}")

    def block_in_dim(self, k: int) -> int:
        return self.input_dim if k == 0 else self.width


BRANCH_SCALE_INIT = 0.1


def n_params(arch: Architecture) -> int:
    """Total trainable-scalar count for an architecture."""
    total = 2 + arch.input_dim                      # beta1, beta2, w
    for k in range(arch.n_blocks):
        fan = arch.block_in_dim(k)
        total += 1                                  # branch scale
        total += arch.width * fan + arch.width      # W1, b1
        total += arch.width * arch.width + arch.width   # W2, b2
    total += arch.width + 1                         # head weights, head bias
    return total


class NetParams:
    """Structured zero-copy view over the flat parameter vector."""

    def __init__(self, arch: Architecture, flat: np.ndarray):
        flat = np.asarray(flat, dtype=float)
        if flat.shape != (n_params(arch),):
            raise ConfigurationError(
                f"flat vector has {flat.size} entries, architecture needs {n_params(arch)}"
            )
        self.arch = arch
        self.flat = flat
        w_end = 2 + arch.input_dim
        self._w = flat[2:w_end]
        self.blocks = []
        pos = w_end
        width = arch.width
        for k in range(arch.n_blocks):
            fan = arch.block_in_dim(k)
            scale = flat[pos: pos + 1]; pos += 1
            W1 = flat[pos: pos + width * fan].reshape(width, fan); pos += width * fan
            b1 = flat[pos: pos + width]; pos += width
            W2 = flat[pos: pos + width * width].reshape(width, width); pos += width * width
            b2 = flat[pos: pos + width]; pos += width
            self.blocks.append((scale, W1, b1, W2, b2))
        self._head_w = flat[pos: pos + width]; pos += width
        self._head_b = flat[pos: pos + 1]

    @property
    def beta1(self) -> float:
        return float(self.flat[0])

    @property
    def beta2(self) -> float:
        return float(self.flat[1])

    @property
    def w(self) -> np.ndarray:
        return self._w

    @property
    def head_w(self) -> np.ndarray:
        return self._head_w

    @property
    def head_b(self) -> float:
        return float(self._head_b[0])

    def copy(self) -> "NetParams":
        return NetParams(self.arch, self.flat.copy())

    def with_flat(self, flat: np.ndarray) -> "NetParams":
        return NetParams(self.arch, flat)


def activation(z):
    """Value and first derivative of act(z) = max(z, 0)^1.5.

    The derivative at z <= 0 is 0 (one-sided limit), which keeps every
    gradient finite.
    """
    zp = np.maximum(z, 0.0)
    root = np.sqrt(zp)
    return zp * root, 1.5 * root


def act_value(z: np.ndarray) -> np.ndarray:
    zp = np.maximum(z, 0.0)
    return zp * np.sqrt(zp)


def act_d1(z: np.ndarray) -> np.ndarray:
    return 1.5 * np.sqrt(np.maximum(z, 0.0))


def act_d2(z: np.ndarray) -> np.ndarray:
    # unbounded as z -> 0+; defined as 0 at z <= 0
    zp = np.maximum(z, 0.0)
    out = np.zeros_like(zp)
    pos = zp > 0.0
    out[pos] = 0.75 / np.sqrt(zp[pos])
    return out


def init_network(arch: Architecture, seed: int) -> NetParams:
    """Kaiming-style init: weights Normal(0, 2/fan_in), biases zero.

    The bypass starts as the identity-scale pair beta1=1, beta2=0 with w drawn
    like any other fan-in input_dim weight; branch scales start at
    BRANCH_SCALE_INIT.  Draw order is fixed (w, then each block's W1 and W2,
    then the head) so a seed pins every parameter.
    """
    rng = np.random.default_rng(seed)
    flat = np.zeros(n_params(arch))
    params = NetParams(arch, flat)
    flat[0] = 1.0                                   # beta1
    params.w[:] = rng.normal(0.0, np.sqrt(2.0 / arch.input_dim), arch.input_dim)
    for k, (scale, W1, b1, W2, b2) in enumerate(params.blocks):
        fan = arch.block_in_dim(k)
        scale[:] = BRANCH_SCALE_INIT
        W1[:] = rng.normal(0.0, np.sqrt(2.0 / fan), W1.shape)
        W2[:] = rng.normal(0.0, np.sqrt(2.0 / arch.width), W2.shape)
    params.head_w[:] = rng.normal(0.0, np.sqrt(2.0 / arch.width), arch.width)
    return params


def network_forward(params: NetParams, x) -> float:
    """Single-point forward pass (reference path; the training kernel is batched)."""
    p = np.asarray(x, dtype=float).reshape(-1)
    if p.size != params.arch.input_dim:
        raise ConfigurationError(
            f"input has {p.size} entries, network expects {params.arch.input_dim}"
        )
    z = p
    for k, (scale, W1, b1, W2, b2) in enumerate(params.blocks):
        inner = act_value(W1 @ act_value(z) + b1)
        r = scale[0] * (W2 @ inner) + b2
        z = r if k == 0 else z + r
    return float(params.beta1 * (params.w @ p) + params.beta2 + params.head_w @ z + params.head_b)

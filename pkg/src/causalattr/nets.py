"""Feedforward and gated-recurrent networks as differentiable functions.

Networks are plain dataclasses over float64 arrays.  Evaluation, gradients,
exact Hessians (reverse-over-reverse), stabilized directional second
differences, recurrent unrolling with input overrides, and unrolled-graph
Jacobians all live here, together with JSON (de)serialization.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .activations import ACTIVATIONS, get_activation
from .errors import (
    CancellationWarning,
    DomainError,
    HessianSizeError,
    NonSmoothWarning,
    SerializationError,
    ShapeError,
)

__all__ = [
    "EvalPoint",
    "DenseLayer",
    "Network",
    "GruNetwork",
    "HESSIAN_CAP",
    "forward",
    "gradient",
    "hessian",
    "directional_second_derivative",
    "second_difference_quotients",
    "unroll",
    "unroll_window",
    "simulate_interventions",
    "unrolled_value_and_hessian",
    "unrolled_second_difference_quotients",
    "output_input_jacobian",
    "save_network",
    "load_network",
    "network_to_json",
    "network_from_json",
]

# exact Hessians above this input count are refused; use the directional path
HESSIAN_CAP = 1024

_AD_OPS = {
    "identity": lambda v: v,
    "tanh": ad.tanh,
    "sigmoid": ad.sigmoid,
    "softplus": ad.softplus,
    "relu": ad.relu,
    "square": lambda v: v * v,
}


def _as_array(x, name, ndim):
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != ndim:
        raise ShapeError(f"{name} must be {ndim}-dimensional, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError(f"{name} contains non-finite entries")
    return a


@dataclass(frozen=True)
class EvalPoint:
    """A point in input space (or a flattened sequence-slot vector)."""

    x: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", _as_array(self.x, "x", 1))


def _point(x) -> np.ndarray:
    if isinstance(x, EvalPoint):
        return x.x
    return _as_array(x, "x", 1)


@dataclass(frozen=True)
class DenseLayer:
    """y = activation(weights @ x + bias); weights is (out, in)."""

    weights: np.ndarray
    bias: np.ndarray
    activation: str = "identity"

    def __post_init__(self):
        object.__setattr__(self, "weights", _as_array(self.weights, "weights", 2))
        object.__setattr__(self, "bias", _as_array(self.bias, "bias", 1))
        if self.weights.shape[0] != self.bias.shape[0]:
            raise ShapeError(
                f"bias length {self.bias.shape[0]} does not match "
                f"{self.weights.shape[0]} weight rows"
            )
        get_activation(self.activation)

    @property
    def input_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def output_dim(self) -> int:
        return self.weights.shape[0]


def _dense_apply(layer: DenseLayer, a: np.ndarray) -> np.ndarray:
    # same expression covers (d,) vectors and (n, d) batches
    return ACTIVATIONS[layer.activation].fn(a @ layer.weights.T + layer.bias)


def _dense_apply_var(layer: DenseLayer, a: ad.Var) -> ad.Var:
    z = (layer.weights @ a) + layer.bias
    return _AD_OPS[layer.activation](z)


@dataclass(frozen=True)
class Network:
    """Fully connected feedforward network: ordered dense layers."""

    layers: tuple[DenseLayer, ...]

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ShapeError("a network needs at least one layer")
        for prev, nxt in zip(layers, layers[1:]):
            if prev.output_dim != nxt.input_dim:
                raise ShapeError(
                    f"layer output dim {prev.output_dim} feeds "
                    f"layer input dim {nxt.input_dim}"
                )
        if layers[0].input_dim < 1:
            raise ShapeError("input_dim must be at least 1")
        object.__setattr__(self, "layers", layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].input_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].output_dim

    @property
    def smooth(self) -> bool:
        return all(ACTIVATIONS[l.activation].smooth for l in self.layers)


def _check_output_index(out_dim: int, output_index: int):
    if not 0 <= output_index < out_dim:
        raise DomainError(f"output_index {output_index} out of range for {out_dim} outputs")


def forward(net: Network, x) -> np.ndarray:
    """Evaluate the network at a vector (or a batch of row vectors)."""
    if isinstance(x, EvalPoint):
        a = x.x
    else:
        a = np.asarray(x, dtype=np.float64)
        if a.ndim not in (1, 2):
            raise ShapeError(f"x must be a vector or a row batch, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise DomainError("x contains non-finite entries")
    if a.shape[-1] != net.input_dim:
        raise ShapeError(f"x has {a.shape[-1]} features, network expects {net.input_dim}")
    for layer in net.layers:
        a = _dense_apply(layer, a)
    return a


def _forward_vars(net: Network, xv: ad.Var):
    """Taped forward pass; returns the output Var and pre-activation values."""
    a = xv
    zs = []
    for layer in net.layers:
        z = (layer.weights @ a) + layer.bias
        zs.append((layer.activation, z.value))
        a = _AD_OPS[layer.activation](z)
    return a, zs


def _at_kink(zs) -> bool:
    return any(name == "relu" and np.any(z == 0.0) for name, z in zs)


def _warn_nonsmooth(what: str):
    warnings.warn(
        f"{what} on a network with non-smooth activations; "
        "second-order quantities use the one-sided kink convention",
        NonSmoothWarning,
        stacklevel=3,
    )


def gradient(net: Network, x, output_index: int = 0) -> np.ndarray:
    """Exact gradient of output component `output_index` w.r.t. the inputs."""
    p = _point(x)
    _check_output_index(net.output_dim, output_index)
    xv = ad.Var(p)
    y, zs = _forward_vars(net, xv)
    if _at_kink(zs):
        warnings.warn(
            "gradient evaluated exactly at a relu kink; "
            "one-sided (left) derivative convention used",
            NonSmoothWarning,
            stacklevel=2,
        )
    seed = np.zeros(net.output_dim)
    seed[output_index] = 1.0
    return ad.backward(y, seed, [xv])[0].value


def hessian(net: Network, x, output_index: int = 0, cap: int = HESSIAN_CAP) -> np.ndarray:
    """Exact Hessian via one taped gradient and one batched second sweep."""
    p = _point(x)
    _check_output_index(net.output_dim, output_index)
    k = net.input_dim
    if k > cap:
        raise HessianSizeError(
            f"exact Hessian refused for {k} inputs (cap {cap}); "
            "use the directional approximation (ie_approx / method 'approx')"
        )
    if not net.smooth:
        _warn_nonsmooth("hessian")
    xv = ad.Var(p)
    y, _ = _forward_vars(net, xv)
    seed = np.zeros(net.output_dim)
    seed[output_index] = 1.0
    g = ad.backward(y, seed, [xv])[0]
    return ad.backward(g, np.eye(k), [xv])[0].value


def _pair_diff_forward(net: Network, mu: np.ndarray, d: np.ndarray, output_index: int):
    """f(mu + d_col) - f(mu) for every column of d, without cancellation.

    The difference is carried through the layers alongside the base point, so
    nearly equal outputs are never subtracted.
    """
    a, da = mu, d
    for layer in net.layers:
        z = layer.weights @ a + layer.bias
        dz = layer.weights @ da
        act = ACTIVATIONS[layer.activation]
        da = act.pair_diff(z, dz)
        a = act.fn(z)
    return da[output_index]


def second_difference_quotients(
    net: Network, mu, directions: np.ndarray, eps: float = 1e-6, output_index: int = 0
) -> np.ndarray:
    """(f(mu+eps·v) + f(mu−eps·v) − 2 f(mu)) / eps² per direction column."""
    p = _point(mu)
    _check_output_index(net.output_dim, output_index)
    v = np.asarray(directions, dtype=np.float64)
    if v.ndim != 2 or v.shape[0] != p.shape[0]:
        raise ShapeError(f"directions must be ({p.shape[0]}, B), got {v.shape}")
    if eps <= 0:
        raise DomainError("eps must be positive")
    nb = v.shape[1]
    d = np.concatenate([eps * v, -eps * v], axis=1)
    deltas = _pair_diff_forward(net, p, d, output_index)
    quotients = (deltas[:nb] + deltas[nb:]) / eps**2
    # residual rounding in the carried differences, relative to the quotient
    bound = 16.0 * np.finfo(float).eps * np.max(np.abs(deltas), initial=0.0) / eps**2
    if bound > 1e-2 * (1.0 + np.max(np.abs(quotients), initial=0.0)):
        warnings.warn(
            f"second difference at eps={eps:g} is cancellation-dominated; "
            f"estimated absolute error bound {bound:.3g}",
            CancellationWarning,
            stacklevel=2,
        )
    if not net.smooth:
        _warn_nonsmooth("directional second derivative")
    return quotients


def directional_second_derivative(
    net: Network, mu, v, eps: float = 1e-6, output_index: int = 0
) -> float:
    """Second difference quotient of the output along direction v."""
    vv = _as_array(v, "v", 1)
    return float(
        second_difference_quotients(net, mu, vv[:, None], eps, output_index)[0]
    )


# -- recurrent ---------------------------------------------------------------


@dataclass(frozen=True)
class GruNetwork:
    """Single-cell gated recurrent network with a dense readout.

    Gate matrices act on the concatenation [x, h] (shape hidden × (input +
    hidden)); the candidate gate sees [x, r⊙h].  Update blend:
    h' = (1−z)⊙n + z⊙h.  When outputs_feed_inputs, the step-t readout becomes
    the step-t+1 input.
    """

    input_dim: int
    hidden_dim: int
    w_update: np.ndarray
    b_update: np.ndarray
    w_reset: np.ndarray
    b_reset: np.ndarray
    w_cand: np.ndarray
    b_cand: np.ndarray
    readout: DenseLayer
    outputs_feed_inputs: bool = False

    def __post_init__(self):
        k, h = self.input_dim, self.hidden_dim
        if k < 1 or h < 1:
            raise ShapeError("input_dim and hidden_dim must be at least 1")
        for name in ("w_update", "w_reset", "w_cand"):
            w = _as_array(getattr(self, name), name, 2)
            object.__setattr__(self, name, w)
            if w.shape != (h, k + h):
                raise ShapeError(f"{name} must be ({h}, {k + h}), got {w.shape}")
        for name in ("b_update", "b_reset", "b_cand"):
            b = _as_array(getattr(self, name), name, 1)
            object.__setattr__(self, name, b)
            if b.shape != (h,):
                raise ShapeError(f"{name} must be ({h},), got {b.shape}")
        if self.readout.input_dim != h:
            raise ShapeError(
                f"readout expects {self.readout.input_dim} inputs, hidden_dim is {h}"
            )
        if self.outputs_feed_inputs and self.readout.output_dim != k:
            raise ShapeError(
                "outputs_feed_inputs requires readout output_dim == input_dim"
            )

    @property
    def output_dim(self) -> int:
        return self.readout.output_dim

    @property
    def smooth(self) -> bool:
        return ACTIVATIONS[self.readout.activation].smooth


def _gru_cell(rnn: GruNetwork, x: np.ndarray, h: np.ndarray) -> np.ndarray:
    # works on (k,) vectors and (n, k) batches alike
    from .activations import sigmoid

    cat = np.concatenate([x, h], axis=-1)
    z = sigmoid(cat @ rnn.w_update.T + rnn.b_update)
    r = sigmoid(cat @ rnn.w_reset.T + rnn.b_reset)
    catn = np.concatenate([x, r * h], axis=-1)
    n = np.tanh(catn @ rnn.w_cand.T + rnn.b_cand)
    return (1.0 - z) * n + z * h


def _gru_cell_var(rnn: GruNetwork, x: ad.Var, h: ad.Var) -> ad.Var:
    k = rnn.input_dim
    az = (rnn.w_update[:, :k] @ x) + (rnn.w_update[:, k:] @ h) + rnn.b_update
    ar = (rnn.w_reset[:, :k] @ x) + (rnn.w_reset[:, k:] @ h) + rnn.b_reset
    z = ad.sigmoid(az)
    r = ad.sigmoid(ar)
    an = (rnn.w_cand[:, :k] @ x) + (rnn.w_cand[:, k:] @ (r * h)) + rnn.b_cand
    n = ad.tanh(an)
    return (1.0 - z) * n + z * h


def _pair_mul(u, du, v, dv):
    # (u+du)(v+dv) - uv, exact product rule for finite differences
    return du * (v[:, None] + dv) + u[:, None] * dv


def _gru_cell_diff(rnn: GruNetwork, x, dx, h, dh):
    """One cell step carrying per-column input/state differences."""
    from .activations import ACTIVATIONS as _acts, sigmoid

    k = rnn.input_dim
    az = rnn.w_update[:, :k] @ x + rnn.w_update[:, k:] @ h + rnn.b_update
    daz = rnn.w_update[:, :k] @ dx + rnn.w_update[:, k:] @ dh
    z = sigmoid(az)
    dz = _acts["sigmoid"].pair_diff(az, daz)
    ar = rnn.w_reset[:, :k] @ x + rnn.w_reset[:, k:] @ h + rnn.b_reset
    dar = rnn.w_reset[:, :k] @ dx + rnn.w_reset[:, k:] @ dh
    r = sigmoid(ar)
    dr = _acts["sigmoid"].pair_diff(ar, dar)
    rh = r * h
    drh = _pair_mul(r, dr, h, dh)
    an = rnn.w_cand[:, :k] @ x + rnn.w_cand[:, k:] @ rh + rnn.b_cand
    dan = rnn.w_cand[:, :k] @ dx + rnn.w_cand[:, k:] @ drh
    n = np.tanh(an)
    dn = _acts["tanh"].pair_diff(an, dan)
    h_new = (1.0 - z) * n + z * h
    dh_new = _pair_mul(1.0 - z, -dz, n, dn) + _pair_mul(z, dz, h, dh)
    return h_new, dh_new


def _check_sequence(rnn: GruNetwork, seq) -> np.ndarray:
    s = np.asarray(seq, dtype=np.float64)
    if s.ndim != 2 or s.shape[1] != rnn.input_dim:
        raise ShapeError(f"sequence must be (T, {rnn.input_dim}), got {s.shape}")
    if s.shape[0] < 1:
        raise ShapeError("sequence must have at least one step")
    if not np.all(np.isfinite(s)):
        raise DomainError("sequence contains non-finite entries")
    return s


def _check_overrides(rnn: GruNetwork, overrides, horizon: int) -> dict:
    out = {}
    for step, (feat, value) in (overrides or {}).items():
        if not 0 <= step <= horizon:
            raise DomainError(f"override step {step} outside 0..{horizon}")
        if not 0 <= feat < rnn.input_dim:
            raise DomainError(f"override feature {feat} outside 0..{rnn.input_dim - 1}")
        out[int(step)] = (int(feat), float(value))
    return out


def unroll(rnn: GruNetwork, seq, horizon: int, overrides=None) -> np.ndarray:
    """Run the cell for steps 0..horizon and return the per-step readouts.

    Inputs come from seq; with outputs_feed_inputs the step-t readout replaces
    the step-t+1 input.  overrides maps step -> (feature, value) and is applied
    before the cell update (the surgical input replacement).
    """
    s = _check_sequence(rnn, seq)
    if horizon < 0:
        raise DomainError("horizon must be >= 0")
    ov = _check_overrides(rnn, overrides, horizon)
    h = np.zeros(rnn.hidden_dim)
    outs = np.empty((horizon + 1, rnn.output_dim))
    y = None
    for t in range(horizon + 1):
        if rnn.outputs_feed_inputs and t > 0:
            x = y.copy()
        elif t < s.shape[0]:
            x = s[t].copy()
        else:
            raise DomainError(
                f"sequence has {s.shape[0]} steps but step {t} is required "
                "and outputs are not fed back"
            )
        if t in ov:
            feat, value = ov[t]
            x[feat] = value
        h = _gru_cell(rnn, x, h)
        y = _dense_apply(rnn.readout, h)
        outs[t] = y
    return outs


def unroll_window(rnn: GruNetwork, window, output_index=None):
    """Evaluate the unrolled map on explicit per-step inputs (all slots free).

    This is the function the recurrent Taylor machinery expands: every input
    slot of the window is an independent coordinate, feedback links having
    been replaced by the recorded slot values.
    """
    w = _check_sequence(rnn, window)
    h = np.zeros(rnn.hidden_dim)
    for t in range(w.shape[0]):
        h = _gru_cell(rnn, w[t], h)
    y = _dense_apply(rnn.readout, h)
    return y if output_index is None else float(y[output_index])


def simulate_interventions(
    rnn: GruNetwork, sequences, i: int, t_hat: int, t_out: int, alpha: float
):
    """Replay every sequence with input slot (t_hat, i) forced to alpha.

    Steps up to t_hat always come from the recorded data (the past is not
    affected by the intervention); afterwards, data keeps driving the cell
    unless outputs_feed_inputs, in which case inputs are generated from the
    readouts.  Returns (windows, outputs): the (n, t_out+1, k) tensor of
    inputs actually fed, and the (n, output_dim) step-t_out readouts.
    """
    if not 0 <= t_hat <= t_out:
        raise DomainError(f"need 0 <= t_hat <= t_out, got t_hat={t_hat}, t_out={t_out}")
    if not 0 <= i < rnn.input_dim:
        raise DomainError(f"feature {i} outside 0..{rnn.input_dim - 1}")
    seqs = [_check_sequence(rnn, s) for s in sequences]
    if not seqs:
        raise DomainError("no sequences to replay")
    need = t_hat if rnn.outputs_feed_inputs else t_out
    short = min(s.shape[0] for s in seqs)
    if short < need + 1:
        raise DomainError(
            f"replay to step {need} needs sequences of length >= {need + 1}, "
            f"shortest has {short}"
        )
    n, k = len(seqs), rnn.input_dim
    windows = np.empty((n, t_out + 1, k))
    h = np.zeros((n, rnn.hidden_dim))
    y = None
    for t in range(t_out + 1):
        if rnn.outputs_feed_inputs and t > t_hat:
            x = y.copy()
        else:
            x = np.stack([s[t] for s in seqs])
        if t == t_hat:
            x[:, i] = alpha
        windows[:, t] = x
        h = _gru_cell(rnn, x, h)
        y = _dense_apply(rnn.readout, h)
    return windows, y


def _unroll_leaves(rnn: GruNetwork, window: np.ndarray):
    leaves = [ad.Var(row) for row in window]
    h = ad.Var(np.zeros(rnn.hidden_dim))
    for x in leaves:
        h = _gru_cell_var(rnn, x, h)
    y = _dense_apply_var(rnn.readout, h)
    return leaves, y


def unrolled_value_and_hessian(rnn: GruNetwork, window, output_index: int = 0):
    """Output value and full Hessian of the unrolled map w.r.t. all slots.

    Returns (f, H) with H of shape (D, D), D = window.size, slot blocks in
    step-major order.
    """
    w = _check_sequence(rnn, window)
    _check_output_index(rnn.output_dim, output_index)
    steps, k = w.shape
    d = steps * k
    if d > HESSIAN_CAP:
        raise HessianSizeError(
            f"exact unrolled Hessian refused for {d} slots (cap {HESSIAN_CAP}); "
            "use the directional approximation"
        )
    if not rnn.smooth:
        _warn_nonsmooth("unrolled hessian")
    leaves, y = _unroll_leaves(rnn, w)
    seed = np.zeros(rnn.output_dim)
    seed[output_index] = 1.0
    grads = ad.backward(y, seed, leaves)
    hess = np.empty((d, d))
    eye = np.eye(k)
    for s, g in enumerate(grads):
        rows = ad.backward(g, eye, leaves)
        for s2, block in enumerate(rows):
            hess[s * k:(s + 1) * k, s2 * k:(s2 + 1) * k] = block.value
    value = float(y.value[output_index])
    return value, hess


def unrolled_second_difference_quotients(
    rnn: GruNetwork, window, directions: np.ndarray, eps: float = 1e-6,
    output_index: int = 0,
) -> np.ndarray:
    """Stabilized (f(w+eps·v)+f(w−eps·v)−2f(w))/eps² over flattened-slot
    direction columns."""
    w = _check_sequence(rnn, window)
    _check_output_index(rnn.output_dim, output_index)
    steps, k = w.shape
    v = np.asarray(directions, dtype=np.float64)
    if v.ndim != 2 or v.shape[0] != steps * k:
        raise ShapeError(f"directions must be ({steps * k}, B), got {v.shape}")
    if eps <= 0:
        raise DomainError("eps must be positive")
    nb = v.shape[1]
    d = np.concatenate([eps * v, -eps * v], axis=1).reshape(steps, k, 2 * nb)
    h = np.zeros(rnn.hidden_dim)
    dh = np.zeros((rnn.hidden_dim, 2 * nb))
    for t in range(steps):
        h, dh = _gru_cell_diff(rnn, w[t], d[t], h, dh)
    ro = rnn.readout
    z = ro.weights @ h + ro.bias
    dz = ro.weights @ dh
    deltas = ACTIVATIONS[ro.activation].pair_diff(z, dz)[output_index]
    quotients = (deltas[:nb] + deltas[nb:]) / eps**2
    bound = 16.0 * np.finfo(float).eps * np.max(np.abs(deltas), initial=0.0) / eps**2
    if bound > 1e-2 * (1.0 + np.max(np.abs(quotients), initial=0.0)):
        warnings.warn(
            f"second difference at eps={eps:g} is cancellation-dominated; "
            f"estimated absolute error bound {bound:.3g}",
            CancellationWarning,
            stacklevel=2,
        )
    return quotients


def _jacobians_all_lags(rnn: GruNetwork, seq: np.ndarray, t: int, output_index):
    """Adjoint sweep through the unrolled graph; returns per-lag Jacobians.

    Element [lag] is the Jacobian of the step-t output w.r.t. the step-(t−lag)
    input: (output_dim, k) for output_index=None, else (k,).
    """
    window = seq[: t + 1]
    leaves = [ad.Var(row) for row in window]
    h = ad.Var(np.zeros(rnn.hidden_dim))
    for x in leaves:
        h = _gru_cell_var(rnn, x, h)
    y = _dense_apply_var(rnn.readout, h)
    if output_index is None:
        seed = np.eye(rnn.output_dim)
    else:
        _check_output_index(rnn.output_dim, output_index)
        seed = np.zeros(rnn.output_dim)
        seed[output_index] = 1.0
    grads = ad.backward(y, seed, leaves)
    return [grads[t - lag].value for lag in range(t + 1)]


def output_input_jacobian(rnn: GruNetwork, seq, t: int, lag: int, output_index=None):
    """Jacobian of the step-t output w.r.t. the step-(t−lag) input.

    Inputs at every step are taken from seq (each slot an independent
    coordinate of the unrolled map).
    """
    s = _check_sequence(rnn, seq)
    if t < 0 or t >= s.shape[0]:
        raise DomainError(f"step t={t} outside the provided sequence (T={s.shape[0]})")
    if not 0 <= lag <= t:
        raise DomainError(f"lag {lag} outside 0..{t}")
    return _jacobians_all_lags(rnn, s, t, output_index)[lag]


# -- serialization ------------------------------------------------------------


def _layer_doc(layer: DenseLayer) -> dict:
    return {
        "weights": layer.weights.tolist(),
        "bias": layer.bias.tolist(),
        "activation": layer.activation,
    }


def _layer_from_doc(doc: dict) -> DenseLayer:
    return DenseLayer(
        np.asarray(doc["weights"], dtype=np.float64),
        np.asarray(doc["bias"], dtype=np.float64),
        str(doc.get("activation", "identity")),
    )


def network_to_json(net) -> str:
    if isinstance(net, Network):
        doc = {"type": "mlp", "layers": [_layer_doc(l) for l in net.layers]}
    elif isinstance(net, GruNetwork):
        doc = {
            "type": "gru",
            "gru": {
                "input_dim": net.input_dim,
                "hidden_dim": net.hidden_dim,
                "update": {"weights": net.w_update.tolist(), "bias": net.b_update.tolist()},
                "reset": {"weights": net.w_reset.tolist(), "bias": net.b_reset.tolist()},
                "candidate": {"weights": net.w_cand.tolist(), "bias": net.b_cand.tolist()},
                "readout": _layer_doc(net.readout),
            },
            "outputs_feed_inputs": net.outputs_feed_inputs,
        }
    else:
        raise SerializationError(f"cannot serialize object of type {type(net).__name__}")
    return json.dumps(doc, indent=2)


def network_from_json(text: str):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SerializationError(f"invalid network document: {exc}") from exc
    try:
        kind = doc["type"]
        if kind == "mlp":
            return Network(tuple(_layer_from_doc(l) for l in doc["layers"]))
        if kind == "gru":
            g = doc["gru"]
            return GruNetwork(
                input_dim=int(g["input_dim"]),
                hidden_dim=int(g["hidden_dim"]),
                w_update=np.asarray(g["update"]["weights"], dtype=np.float64),
                b_update=np.asarray(g["update"]["bias"], dtype=np.float64),
                w_reset=np.asarray(g["reset"]["weights"], dtype=np.float64),
                b_reset=np.asarray(g["reset"]["bias"], dtype=np.float64),
                w_cand=np.asarray(g["candidate"]["weights"], dtype=np.float64),
                b_cand=np.asarray(g["candidate"]["bias"], dtype=np.float64),
                readout=_layer_from_doc(g["readout"]),
                outputs_feed_inputs=bool(doc.get("outputs_feed_inputs", False)),
            )
        raise SerializationError(f"unknown network type {kind!r}")
    except (KeyError, TypeError, ValueError) as exc:
        raise SerializationError(f"malformed network document: {exc}") from exc


def save_network(net, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(network_to_json(net))
        fh.write("\n")


def load_network(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return network_from_json(fh.read())
    except OSError as exc:
        raise SerializationError(f"cannot read network file {path}: {exc}") from exc

"""Deterministic desk-scale training and data generation.

Plain full-batch gradient descent, hand-rolled backprop (feedforward softmax
classifier) and backprop-through-time (recurrent binary classifier), seeded
end to end: same seed, same bytes.  Also the synthetic sequence generator and
the packaged Iris table.
"""
from __future__ import annotations

import csv
from importlib import resources

import numpy as np

from .errors import DomainError, ShapeError, TrainingDivergedError
from .moments import Dataset, SequenceDataset
from .nets import DenseLayer, GruNetwork, Network
from .activations import ACTIVATIONS, get_activation, sigmoid

__all__ = [
    "synth_sequences",
    "train_mlp",
    "train_gru",
    "iris_dataset",
    "write_training_log",
]


def synth_sequences(n: int, seed: int = 0):
    """Two-class synthetic sequences: class decides the sign of the first
    three steps.

    Lengths are uniform on {10, ..., 15}; steps 0-2 draw from
    Normal(+-1, var 0.2) by class, later steps from Normal(0, var 0.2).
    Returns (SequenceDataset, labels).
    """
    if n < 1:
        raise DomainError("need n >= 1 sequences")
    rng = np.random.default_rng(seed)
    sigma = np.sqrt(0.2)
    seqs, labels = [], np.empty(n, dtype=int)
    for idx in range(n):
        length = int(rng.integers(10, 16))
        label = int(rng.random() < 0.5)
        head = rng.normal(1.0 if label else -1.0, sigma, size=3)
        tail = rng.normal(0.0, sigma, size=length - 3)
        seqs.append(np.concatenate([head, tail])[:, None])
        labels[idx] = label
    return SequenceDataset(tuple(seqs), ("x0",)), labels


def _check_labels(labels, n: int, classes: int) -> np.ndarray:
    y = np.asarray(labels)
    if y.shape != (n,):
        raise ShapeError(f"labels must have shape ({n},), got {y.shape}")
    y = y.astype(int)
    if y.min() < 0 or y.max() >= classes:
        raise DomainError(f"labels must lie in 0..{classes - 1}")
    return y


def _softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def train_mlp(data, labels, hidden=(16,), activation: str = "relu",
              epochs: int = 2000, lr: float = 0.05, seed: int = 0):
    """Softmax classifier trained by full-batch gradient descent.

    `data` is a Dataset or an (n, k) row matrix; labels are class indices.
    Returns (Network, history) with per-epoch (epoch, loss, accuracy) rows.
    The returned network outputs logits.
    """
    rows = data.rows if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
    if rows.ndim != 2:
        raise ShapeError(f"rows must be (n, k), got {rows.shape}")
    classes = int(np.max(labels)) + 1
    y = _check_labels(labels, rows.shape[0], classes)
    get_activation(activation)
    rng = np.random.default_rng(seed)
    sizes = [rows.shape[1], *hidden, classes]
    weights = [
        rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(fan_out, fan_in))
        for fan_in, fan_out in zip(sizes, sizes[1:])
    ]
    biases = [np.zeros(fan_out) for fan_out in sizes[1:]]
    onehot = np.zeros((rows.shape[0], classes))
    onehot[np.arange(rows.shape[0]), y] = 1.0
    act = ACTIVATIONS[activation]
    n = rows.shape[0]
    history = []
    for epoch in range(1, epochs + 1):
        acts = [rows]
        zs = []
        a = rows
        for layer, (w, b) in enumerate(zip(weights, biases)):
            z = a @ w.T + b
            zs.append(z)
            a = act.fn(z) if layer < len(weights) - 1 else z
            acts.append(a)
        probs = _softmax(acts[-1])
        loss = float(-np.mean(np.log(probs[np.arange(n), y] + 1e-300)))
        if not np.isfinite(loss):
            raise TrainingDivergedError(f"non-finite loss at epoch {epoch}")
        accuracy = float(np.mean(np.argmax(probs, axis=1) == y))
        history.append((epoch, loss, accuracy))
        dz = (probs - onehot) / n
        for layer in range(len(weights) - 1, -1, -1):
            dw = dz.T @ acts[layer]
            db = dz.sum(axis=0)
            if layer > 0:
                dz = (dz @ weights[layer]) * act.deriv(zs[layer - 1])
            weights[layer] -= lr * dw
            biases[layer] -= lr * db
    layers = [
        DenseLayer(w, b, activation if idx < len(weights) - 1 else "identity")
        for idx, (w, b) in enumerate(zip(weights, biases))
    ]
    return Network(tuple(layers)), history


def _init_gru(k: int, hidden: int, rng) -> dict:
    scale_g = 1.0 / np.sqrt(k + hidden)
    # positive update bias starts the gate near "carry": without it the state
    # halves every step and early-step signal dies before the readout
    return {
        "w_update": rng.normal(0.0, scale_g, size=(hidden, k + hidden)),
        "b_update": np.full(hidden, 2.0),
        "w_reset": rng.normal(0.0, scale_g, size=(hidden, k + hidden)),
        "b_reset": np.zeros(hidden),
        "w_cand": rng.normal(0.0, scale_g, size=(hidden, k + hidden)),
        "b_cand": np.zeros(hidden),
        "w_out": rng.normal(0.0, 1.0 / np.sqrt(hidden), size=(1, hidden)),
        "b_out": np.zeros(1),
    }


def train_gru(data, labels, hidden_dim: int = 1, epochs: int = 600,
              lr: float = 1.0, seed: int = 0):
    """Binary sequence classifier: GRU plus sigmoid readout on the final step,
    logistic loss, full-batch gradient descent through time.

    `data` is a SequenceDataset or a list of (T, k) arrays.  Returns
    (GruNetwork, history) with per-epoch (epoch, loss, accuracy) rows.
    """
    seqs = list(data.sequences) if isinstance(data, SequenceDataset) else [
        np.asarray(s, dtype=np.float64) for s in data
    ]
    if not seqs:
        raise DomainError("no sequences to train on")
    k = seqs[0].shape[1]
    y_all = _check_labels(labels, len(seqs), 2).astype(np.float64)
    rng = np.random.default_rng(seed)
    p = _init_gru(k, hidden_dim, rng)

    # bucket by length so each bucket trains as one dense batch
    buckets: dict[int, list[int]] = {}
    for idx, s in enumerate(seqs):
        buckets.setdefault(s.shape[0], []).append(idx)
    packed = [
        (np.stack([seqs[i] for i in idxs]), y_all[list(idxs)])
        for _, idxs in sorted(buckets.items())
    ]
    total = len(seqs)
    history = []
    for epoch in range(1, epochs + 1):
        grads = {name: np.zeros_like(val) for name, val in p.items()}
        loss = 0.0
        correct = 0.0
        for xs, yb in packed:
            nb, t_len, _ = xs.shape
            h = np.zeros((nb, hidden_dim))
            stash = []
            for t in range(t_len):
                x = xs[:, t]
                cat = np.concatenate([x, h], axis=1)
                z = sigmoid(cat @ p["w_update"].T + p["b_update"])
                r = sigmoid(cat @ p["w_reset"].T + p["b_reset"])
                catn = np.concatenate([x, r * h], axis=1)
                ncand = np.tanh(catn @ p["w_cand"].T + p["b_cand"])
                h_new = (1.0 - z) * ncand + z * h
                stash.append((x, h, z, r, ncand))
                h = h_new
            logits = (h @ p["w_out"].T + p["b_out"])[:, 0]
            prob = sigmoid(logits)
            loss += float(-np.sum(
                yb * np.log(prob + 1e-300) + (1 - yb) * np.log(1 - prob + 1e-300)
            ))
            correct += float(np.sum((prob > 0.5) == yb))
            dlogit = (prob - yb)[:, None] / total
            grads["w_out"] += dlogit.T @ h
            grads["b_out"] += dlogit.sum(axis=0)
            dh = dlogit @ p["w_out"]
            for t in range(t_len - 1, -1, -1):
                x, h_prev, z, r, ncand = stash[t]
                dz = dh * (h_prev - ncand)
                dn = dh * (1.0 - z)
                dh_prev = dh * z
                dan = dn * (1.0 - ncand**2)
                catn = np.concatenate([x, r * h_prev], axis=1)
                grads["w_cand"] += dan.T @ catn
                grads["b_cand"] += dan.sum(axis=0)
                dcatn = dan @ p["w_cand"]
                dr = dcatn[:, k:] * h_prev
                dh_prev += dcatn[:, k:] * r
                daz = dz * z * (1.0 - z)
                cat = np.concatenate([x, h_prev], axis=1)
                grads["w_update"] += daz.T @ cat
                grads["b_update"] += daz.sum(axis=0)
                dh_prev += (daz @ p["w_update"])[:, k:]
                dar = dr * r * (1.0 - r)
                grads["w_reset"] += dar.T @ cat
                grads["b_reset"] += dar.sum(axis=0)
                dh_prev += (dar @ p["w_reset"])[:, k:]
                dh = dh_prev
        loss /= total
        if not np.isfinite(loss):
            raise TrainingDivergedError(f"non-finite loss at epoch {epoch}")
        history.append((epoch, loss, correct / total))
        for name in p:
            p[name] -= lr * grads[name]
    net = GruNetwork(
        input_dim=k,
        hidden_dim=hidden_dim,
        w_update=p["w_update"],
        b_update=p["b_update"],
        w_reset=p["w_reset"],
        b_reset=p["b_reset"],
        w_cand=p["w_cand"],
        b_cand=p["b_cand"],
        readout=DenseLayer(p["w_out"], p["b_out"], "sigmoid"),
    )
    return net, history


def iris_dataset(normalized: bool = False):
    """The packaged 150-flower table: (Dataset with 4 features, labels 0..2).

    normalized=True min-max scales each feature to [0, 1].
    """
    path = resources.files("causalattr").joinpath("data/iris.csv")
    with path.open("r", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(c) for c in row] for row in reader]
    table = np.asarray(rows)
    features, labels = table[:, :4], table[:, 4].astype(int)
    if normalized:
        lo, hi = features.min(axis=0), features.max(axis=0)
        features = (features - lo) / (hi - lo)
    return Dataset(features, tuple(header[:4])), labels


def write_training_log(path, history):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epoch", "loss", "accuracy"])
        for epoch, loss, accuracy in history:
            writer.writerow([epoch, repr(float(loss)), repr(float(accuracy))])

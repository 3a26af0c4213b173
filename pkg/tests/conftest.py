"""Shared fixtures: hand-checkable nets, random net factories, GRU fixtures
with saturated gates, and dataset builders."""
import numpy as np
import pytest

from causalattr import Dataset, DenseLayer, GruNetwork, Network, SequenceDataset


@pytest.fixture
def product_net():
    # y = ((x1+x2)^2 - (x1-x2)^2) / 4 = x1 * x2
    return Network((
        DenseLayer([[1.0, 1.0], [1.0, -1.0]], [0.0, 0.0], "square"),
        DenseLayer([[0.25, -0.25]], [0.0], "identity"),
    ))


@pytest.fixture
def constant_net():
    # y = 7 regardless of the input
    return Network((
        DenseLayer([[0.0, 0.0], [0.0, 0.0]], [7.0, 0.0], "identity"),
        DenseLayer([[1.0, 0.0]], [0.0], "identity"),
    ))


def linear_net(weights, bias=0.0):
    w = np.atleast_2d(np.asarray(weights, dtype=float))
    return Network((DenseLayer(w, [float(bias)] * w.shape[0], "identity"),))


def random_mlp(rng, k, widths=(8, 6), activation="tanh", out_dim=1, scale=1.0):
    sizes = [k, *widths, out_dim]
    layers = []
    for idx, (fan_in, fan_out) in enumerate(zip(sizes, sizes[1:])):
        w = rng.normal(0.0, scale / np.sqrt(fan_in), size=(fan_out, fan_in))
        b = rng.normal(0.0, 0.1, size=fan_out)
        act = activation if idx < len(sizes) - 2 else "identity"
        layers.append(DenseLayer(w, b, act))
    return Network(tuple(layers))


def random_quadratic_net(rng, k):
    """Random polynomial of total degree <= 2 in the inputs.

    Sums of squared affine forms span quadratic + linear + constant terms
    (the bias inside the square supplies the linear part)."""
    m = 6
    w1 = rng.normal(0.0, 0.6, size=(m, k))
    b1 = rng.normal(0.0, 0.8, size=m)
    w2 = rng.normal(0.0, 0.7, size=(1, m))
    b2 = rng.normal(size=1)
    return Network((
        DenseLayer(w1, b1, "square"),
        DenseLayer(w2, b2, "identity"),
    ))


def random_dataset(rng, n, k, spread=1.0, center=None):
    center = np.zeros(k) if center is None else np.asarray(center, dtype=float)
    rows = center + spread * rng.normal(size=(n, k))
    return Dataset(rows)


def random_gru(rng, k=1, hidden=2, out_dim=1, scale=0.8, readout_act="identity",
               feed=False):
    def gate():
        return rng.normal(0.0, scale / np.sqrt(k + hidden), size=(hidden, k + hidden))

    return GruNetwork(
        input_dim=k,
        hidden_dim=hidden,
        w_update=gate(),
        b_update=rng.normal(0.0, 0.3, size=hidden),
        w_reset=gate(),
        b_reset=rng.normal(0.0, 0.3, size=hidden),
        w_cand=gate(),
        b_cand=rng.normal(0.0, 0.3, size=hidden),
        readout=DenseLayer(
            rng.normal(0.0, 1.0 / np.sqrt(hidden), size=(out_dim, hidden)),
            np.zeros(out_dim),
            readout_act,
        ),
        outputs_feed_inputs=feed,
    )


def zero_recurrence_gru(wx=1.2, b=0.1):
    """Update gate saturated off: the state is rebuilt from the current input
    alone, so outputs equal a per-step feedforward readout of x_t."""
    return GruNetwork(
        input_dim=1,
        hidden_dim=1,
        w_update=[[0.0, 0.0]],
        b_update=[-40.0],  # z = sigmoid(-40) ~ 4e-18: no state carried
        w_reset=[[0.0, 0.0]],
        b_reset=[0.0],
        w_cand=[[wx, 0.0]],
        b_cand=[b],
        readout=DenseLayer([[1.0]], [0.0], "identity"),
    )


def zero_recurrence_equivalent_mlp(wx=1.2, b=0.1):
    """The per-step map of zero_recurrence_gru as a feedforward net."""
    return Network((
        DenseLayer([[wx]], [b], "tanh"),
        DenseLayer([[1.0]], [0.0], "identity"),
    ))


def unit_lag_gru(c=1e-3):
    """y^t ~ x^{t-1}: a two-cell shift register through saturated gates.

    h[0] tracks c*x_t, h[1] tracks c*h_prev[0]; the readout rescales.  The
    only surviving lag-2 path goes through the 4e-18 update leak.
    """
    return GruNetwork(
        input_dim=1,
        hidden_dim=2,
        w_update=[[0.0, 0.0, 0.0], [0.0, 0.0, 0.0]],
        b_update=[-40.0, -40.0],
        w_reset=[[0.0, 0.0, 0.0], [0.0, 0.0, 0.0]],
        b_reset=[40.0, 40.0],  # r ~ 1
        w_cand=[[c, 0.0, 0.0], [0.0, c, 0.0]],
        b_cand=[0.0, 0.0],
        readout=DenseLayer([[0.0, 1.0 / (c * c)]], [0.0], "identity"),
    )


def random_sequences(rng, n, k=1, lengths=(5, 9), spread=1.0):
    seqs = []
    for _ in range(n):
        t_len = int(rng.integers(lengths[0], lengths[1] + 1))
        seqs.append(spread * rng.normal(size=(t_len, k)))
    return SequenceDataset(tuple(seqs))

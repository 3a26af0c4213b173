"""Brute-force interventional expectations by full enumeration.

Ground truth for the Taylor machinery: force the coordinate, push every
observation (or replay every sequence) through the network, average.  No
sampling, no expansion, no approximation error beyond float rounding.
"""
from __future__ import annotations

import numpy as np

from .errors import DomainError
from .moments import Dataset, SequenceDataset
from .nets import GruNetwork, Network, forward, simulate_interventions

__all__ = ["enumerate_ie", "enumerate_ie_recurrent"]


def enumerate_ie(net: Network, data: Dataset, i: int, alpha: float,
                 output_index: int = 0) -> float:
    """Mean output over all rows with column i forced to alpha."""
    if not 0 <= i < data.k:
        raise DomainError(f"feature {i} outside 0..{data.k - 1}")
    rows = data.rows.copy()
    rows[:, i] = alpha
    outs = forward(net, rows)
    return float(np.mean(outs[:, output_index]))


def enumerate_ie_recurrent(rnn: GruNetwork, data: SequenceDataset, i: int,
                           t_hat: int, t_out: int, alpha: float,
                           output_index: int = 0) -> float:
    """Mean step-t_out output over all sequences replayed with the override."""
    _, outputs = simulate_interventions(rnn, data.sequences, i, t_hat, t_out, alpha)
    return float(np.mean(outputs[:, output_index]))

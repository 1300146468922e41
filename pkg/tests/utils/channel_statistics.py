"""Monte Carlo statistics of unit losses after grouping."""

from __future__ import annotations

import numpy as np

from semequal.channel import ChannelModel
from semequal.partition import PartitionSpec, SemanticUnit
from semequal.rng import derive_seed
from semequal.transport import Interleave, group


def adjacent_loss_correlation(
    model: ChannelModel,
    unit_count: int,
    per_packet: int,
    trials: int,
    interleave: Interleave,
) -> float:
    """
    Pearson correlation of the loss indicators of units i and i + 1.

    Args:
        model: Channel the packets go through.
        unit_count: N.
        per_packet: U.
        trials: Independent channel realizations.
        interleave: Grouping mode.

    Returns:
        The correlation pooled over all adjacent pairs and trials.
    """
    spec = PartitionSpec("channel_of_map", 1, "channel_map", (unit_count, 1, 1))
    units = [SemanticUnit(index, np.zeros(1, dtype=np.int8)) for index in range(unit_count)]
    lost = np.zeros((trials, unit_count), dtype=bool)
    for trial in range(trials):
        packets = group(units, derive_seed(17, trial), per_packet, spec, interleave=interleave)
        drops = model.losses(len(packets), trial)
        for packet, dropped in zip(packets, drops):
            lost[trial, list(packet.unit_ids)] = dropped
    left = lost[:, :-1].reshape(-1).astype(np.float64)
    right = lost[:, 1:].reshape(-1).astype(np.float64)
    return float(np.corrcoef(left, right)[0, 1])

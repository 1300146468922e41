"""
Packet erasure channel models.

Classes:
    ChannelModel: i.i.d. Bernoulli or Gilbert-Elliott burst erasures.

Every draw comes from `numpy.random.default_rng([seed, *key])`, so a trial identified by
its key sees the same losses no matter which thread or order it runs in.
"""

from __future__ import annotations

import dataclasses
import sys

import numpy as np

if sys.version_info >= (3, 11):
    import typing
else:
    import typing_extensions as typing

from semequal.exceptions import ConfigError

ChannelKind = typing.Literal["iid", "gilbert_elliott"]


@dataclasses.dataclass(frozen=True)
class ChannelModel:
    """
    Erasure process applied once per packet.

    Attributes:
        kind (ChannelKind): `iid` or `gilbert_elliott`.
        p (float): Drop probability of the i.i.d. model.
        p_gb (float): Good to bad transition probability.
        p_bg (float): Bad to good transition probability.
        loss_good (float): Drop probability in the good state.
        loss_bad (float): Drop probability in the bad state.
        seed (int): Master seed of the channel streams.
    """

    kind: ChannelKind = "iid"
    p: float = 0.0
    p_gb: float = 0.1
    p_bg: float = 0.5
    loss_good: float = 0.0
    loss_bad: float = 1.0
    seed: int = 2

    def __post_init__(self) -> None:
        """
        Validate the model.

        Raises:
            ConfigError: If the kind is unknown or a probability is outside [0, 1].
        """
        if self.kind not in ("iid", "gilbert_elliott"):
            raise ConfigError(f"Unknown channel kind {self.kind!r}.")
        for name in ("p", "p_gb", "p_bg", "loss_good", "loss_bad"):
            value = getattr(self, name)
            if not 0 <= value <= 1:
                raise ConfigError(f"`channel.{name}` must lie in [0, 1], got {value}.")

    @property
    def stationary_bad(self) -> float:
        """Return the long-run probability of the bad state."""
        total = self.p_gb + self.p_bg
        return self.p_gb / total if total > 0 else 0.0

    @property
    def mean_loss(self) -> float:
        """Return the long-run packet loss probability."""
        if self.kind == "iid":
            return self.p
        bad = self.stationary_bad
        return (1 - bad) * self.loss_good + bad * self.loss_bad

    def with_rate(self, rate: float) -> ChannelModel:
        """
        Return a model with long-run loss `rate`.

        The i.i.d. model sets p. The burst model drops every packet in the bad state
        and none in the good state, keeps its mean burst length 1 / p_bg and solves
        p_gb = rate * p_bg / (1 - rate). When that exceeds 1 the good state lasts one
        packet and bursts lengthen instead.

        Raises:
            ConfigError: If `rate` is outside [0, 1].
        """
        if not 0 <= rate <= 1:
            raise ConfigError(f"A loss rate must lie in [0, 1], got {rate}.")
        if self.kind == "iid":
            return dataclasses.replace(self, p=rate)
        if rate == 0:
            p_gb, p_bg = 0.0, self.p_bg
        elif rate == 1:
            p_gb, p_bg = 1.0, 0.0
        else:
            p_gb, p_bg = rate * self.p_bg / (1 - rate), self.p_bg
            if p_gb > 1 or p_bg == 0:
                p_gb, p_bg = 1.0, (1 - rate) / rate
        return dataclasses.replace(self, p_gb=p_gb, p_bg=p_bg, loss_good=0.0, loss_bad=1.0)

    def stream(self, *key: int) -> np.random.Generator:
        """Return the random stream of one trial."""
        return np.random.default_rng([self.seed, *key])

    def losses(self, count: int, *key: int) -> np.ndarray:
        """
        Draw the loss indicators of `count` consecutive packets.

        Args:
            count (int): Number of packets.
            key (int): Identifies the trial.

        Returns:
            np.ndarray: Booleans, True where the packet is dropped.
        """
        rng = self.stream(*key)
        if self.kind == "iid":
            return rng.random(count) < self.p

        draws = rng.random((count, 2))
        lost = np.zeros(count, dtype=bool)
        bad = bool(rng.random() < self.stationary_bad)
        for position in range(count):
            loss = self.loss_bad if bad else self.loss_good
            lost[position] = draws[position, 0] < loss
            flip = self.p_bg if bad else self.p_gb
            if draws[position, 1] < flip:
                bad = not bad
        return lost

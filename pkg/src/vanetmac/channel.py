"""Radio channel: banded Nakagami-m fading and receiver-side collisions.

Reception succeeds when the faded receive power clears a threshold.  Under
Nakagami-m fading the received power is Gamma-distributed, so the success
probability has the closed form Q(m, m * x) with Q the regularized upper
incomplete gamma function and x the threshold-to-mean-power ratio at the
receiver's distance.

The model is calibrated so that a lone transmission at exactly the nominal
range succeeds with probability 0.5; inside that range the probability
rises monotonically toward 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.special import gammaincc

LN2 = math.log(2.0)

# Outcome codes for a (transmission, in-range receiver) pair.
SUCCESS = 0
COLLIDED = 1
FADED = 2

OUTCOME_NAMES = {SUCCESS: "SUCCESS", COLLIDED: "COLLIDED_AT", FADED: "FADED"}


@dataclass(frozen=True)
class ChannelModel:
    """Propagation parameters.

    `bands` maps distance ceilings (meters) to Nakagami shape factors; the
    last band must have ceiling = inf.  Shapes below 0.5 are not physical.
    With `fading` False every in-range, collision-free reception succeeds
    (the m -> infinity limit), which keeps small worked examples exact.
    """

    alpha: float = 2.0
    bands: tuple = ((100.0, 3.0), (200.0, 1.5), (math.inf, 1.0))
    range_m: float = 300.0
    ref_distance: float = 1.0
    threshold: float = 1.0
    fading: bool = True

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("path-loss exponent must be positive")
        if any(m < 0.5 for _, m in self.bands):
            raise ValueError("Nakagami shape must be >= 0.5")
        if self.bands[-1][0] != math.inf:
            raise ValueError("last fading band must be unbounded")

    def shape_at(self, d: float) -> float:
        for ceiling, m in self.bands:
            if d <= ceiling:
                return m
        return self.bands[-1][1]


def nakagami_success_prob(d: float, ch: ChannelModel) -> float:
    """P(received power clears the threshold) for one sender at distance d.

    Mean SNR falls off as (ref/d)^alpha and is calibrated so the probability
    at d = range_m is exactly 0.5.  Non-positive distances are clamped to
    the co-located reference distance.
    """
    if not ch.fading:
        return 1.0
    if d <= 0:
        d = ch.ref_distance
    m = ch.shape_at(d)
    x = LN2 * (d / ch.range_m) ** ch.alpha  # threshold / mean SNR
    return float(gammaincc(m, m * x))


def success_prob_array(d: np.ndarray, ch: ChannelModel) -> np.ndarray:
    """Vectorized nakagami_success_prob over a distance array."""
    if not ch.fading:
        return np.ones_like(d)
    d = np.where(d <= 0, ch.ref_distance, d)
    m = np.full_like(d, ch.bands[-1][1])
    for ceiling, shape in reversed(ch.bands[:-1]):
        m = np.where(d <= ceiling, shape, m)
    x = LN2 * (d / ch.range_m) ** ch.alpha
    return gammaincc(m, m * x)


def ring_distance(xa, xb, L: float, lane_gap: float = 0.0, lanes_differ=0):
    """Distance on the wrap-around highway, optionally across lanes."""
    dx = np.abs(xa - xb)
    dx = np.minimum(dx, L - dx)
    if lane_gap:
        return np.hypot(dx, lane_gap * lanes_differ)
    return dx


class TxIn(NamedTuple):
    """One transmission offered to the channel."""

    tx_id: int
    sender: int      # vehicle index
    start: int       # microseconds
    airtime: int     # microseconds


class TxOutcome(NamedTuple):
    """Receiver-side result for one transmission.

    Potential receivers are the vehicles in range of the sender that are not
    themselves transmitting during the frame; each gets exactly one outcome.
    """

    tx_id: int
    n_eligible: int
    success: np.ndarray   # receiver indices that decoded the frame
    collided: np.ndarray  # receiver indices that saw >= 2 overlapping frames
    faded: np.ndarray     # receiver indices where the lone frame faded out


class DeliveryResult(NamedTuple):
    outcomes: list           # TxOutcome per requested transmission
    conflict_pairs: list     # (tx_id_a, tx_id_b) that collided at >= 1 receiver


def deliver(
    txs: Sequence[TxIn],
    x: np.ndarray,
    lane: np.ndarray,
    ch: ChannelModel,
    rng: np.random.Generator,
    L: float,
    lane_gap: float,
    targets: Optional[Sequence[int]] = None,
) -> DeliveryResult:
    """Resolve receiver-side outcomes for a set of transmissions.

    `x` has shape (k, N): vehicle positions sampled at each transmission's
    start.  A receiver in range of two or more time-overlapping frames sees
    a collision for all of them; a receiver of exactly one in-range frame
    decodes it with the fading success probability at its distance.

    `targets` selects which transmissions get outcomes (default: all); the
    remainder still contribute interference.
    """
    k = len(txs)
    n = x.shape[1]
    senders = np.fromiter((t.sender for t in txs), dtype=np.int64, count=k)
    starts = np.fromiter((t.start for t in txs), dtype=np.int64, count=k)
    ends = starts + np.fromiter((t.airtime for t in txs), dtype=np.int64, count=k)

    # Pairwise time overlap on half-open intervals.
    overlap = (starts[:, None] < ends[None, :]) & (starts[None, :] < ends[:, None])
    np.fill_diagonal(overlap, False)

    # Geometry at each transmission's start instant.
    sx = x[np.arange(k), senders]
    sl = lane[senders]
    dist = ring_distance(sx[:, None], x, L, lane_gap, np.abs(sl[:, None] - lane[None, :]))
    in_range = dist <= ch.range_m
    in_range[np.arange(k), senders] = False

    # A vehicle transmitting during frame i cannot receive frame i.
    tx_busy = np.zeros((k, n), dtype=bool)
    for i in range(k):
        tx_busy[i, senders[i]] = True
        js = np.nonzero(overlap[i])[0]
        if js.size:
            tx_busy[i, senders[js]] = True

    eligible = in_range & ~tx_busy
    interference = overlap.astype(np.int8) @ in_range.astype(np.int8)
    conflicted = eligible & in_range & (interference > 0)
    clean = eligible & ~conflicted

    if ch.fading:
        draws = rng.random((k, n))
        ok = clean & (draws < success_prob_array(dist, ch))
    else:
        ok = clean
    faded = clean & ~ok

    want = range(k) if targets is None else targets
    outcomes = []
    for i in want:
        outcomes.append(
            TxOutcome(
                txs[i].tx_id,
                int(eligible[i].sum()),
                np.nonzero(ok[i])[0],
                np.nonzero(conflicted[i])[0],
                np.nonzero(faded[i])[0],
            )
        )

    pairs = []
    for i in range(k):
        for j in range(i + 1, k):
            if overlap[i, j]:
                both = in_range[i] & in_range[j] & (eligible[i] | eligible[j])
                if both.any():
                    pairs.append((txs[i].tx_id, txs[j].tx_id))
    return DeliveryResult(outcomes, pairs)

"""Maximal-length PN sequence generation from Fibonacci LFSRs.

Tap masks use bit ``k - 1`` for register stage ``k`` (polynomial term
``x^k``); the implicit ``x^0`` term is not part of the mask.  Stage 1 is
the least significant bit of the state and receives the feedback, stage
``N`` is the output stage.

The built-in primitive polynomials in :data:`DEFAULT_TAPS` are a stand-in:
the hardware tap programming for each degree is not published, so any
maximal mask can be passed explicitly instead.
"""
from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    InvalidDegreeError,
    InvalidInputError,
    InvalidLagError,
    InvalidTapsError,
    NonMaximalTapsError,
)

MIN_DEGREE = 5
MAX_DEGREE = 12

# Primitive feedback polynomials, listed as the exponents of their nonzero
# terms (x^0 omitted).
DEFAULT_TAPS = {
    5: (5, 3),
    6: (6, 5),
    7: (7, 6),
    8: (8, 6, 5, 4),
    9: (9, 5),
    10: (10, 7),
    11: (11, 9),
    12: (12, 6, 4, 1),
}


def taps_to_mask(exponents) -> int:
    """Convert polynomial exponents, e.g. ``(5, 3)``, into a tap bitmask."""
    mask = 0
    for k in exponents:
        if k < 1:
            raise InvalidTapsError(f"tap position {k} must be >= 1")
        mask |= 1 << (k - 1)
    return mask


def mask_to_taps(mask: int) -> tuple:
    return tuple(k + 1 for k in reversed(range(mask.bit_length())) if mask >> k & 1)


def _check_degree(degree: int) -> None:
    if not MIN_DEGREE <= degree <= MAX_DEGREE:
        raise InvalidDegreeError(
            f"degree {degree} outside supported range {MIN_DEGREE}..{MAX_DEGREE}"
        )


def default_taps(degree: int) -> int:
    """Return the built-in maximal tap mask for ``degree`` (5..12)."""
    _check_degree(degree)
    return taps_to_mask(DEFAULT_TAPS[degree])


@dataclass(frozen=True)
class LfsrConfig:
    """One PN generator: register length, feedback taps and seed state.

    ``taps=None`` selects :func:`default_taps`.
    """

    degree: int
    taps: Optional[int] = None
    initial_state: int = 1

    def __post_init__(self):
        _check_degree(self.degree)
        if self.taps is None:
            object.__setattr__(self, "taps", default_taps(self.degree))
        full = (1 << self.degree) - 1
        if self.taps <= 0 or self.taps > full:
            raise InvalidTapsError(
                f"tap mask 0x{self.taps:x} does not fit a degree-{self.degree} register"
            )
        if not self.taps >> (self.degree - 1) & 1:
            raise InvalidTapsError(
                f"tap mask 0x{self.taps:x} lacks the x^{self.degree} term"
            )
        if self.initial_state == 0:
            raise InvalidInputError("initial_state must be nonzero (all-zero state is stuck)")
        if not 0 < self.initial_state <= full:
            raise InvalidInputError(
                f"initial_state {self.initial_state} does not fit {self.degree} bits"
            )

    @property
    def length(self) -> int:
        return (1 << self.degree) - 1


@dataclass(frozen=True, eq=False)
class PnSequence:
    """One full period of chips (0/1) for a degree-``degree`` m-sequence."""

    chips: np.ndarray
    degree: int
    config: Optional[LfsrConfig] = field(default=None, repr=False)

    def __post_init__(self):
        chips = np.array(self.chips, dtype=np.uint8)
        chips.setflags(write=False)
        object.__setattr__(self, "chips", chips)

    def __len__(self) -> int:
        return len(self.chips)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PnSequence):
            return NotImplemented
        return self.degree == other.degree and np.array_equal(self.chips, other.chips)

    def __hash__(self) -> int:
        return hash((self.degree, self.chips.tobytes()))

    @property
    def length(self) -> int:
        return len(self.chips)

    def bipolar(self) -> np.ndarray:
        """Chips mapped 1 -> +1.0, 0 -> -1.0."""
        return 2.0 * self.chips.astype(np.float64) - 1.0

    def to_bitstring(self) -> str:
        return "".join("1" if c else "0" for c in self.chips)

    def to_csv(self) -> str:
        """Bipolar chip values, one per row, under a ``chip`` header."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["chip"])
        for v in self.bipolar():
            writer.writerow([f"{v:+.1f}"])
        return buf.getvalue()


def _step(state: int, taps: int, mask: int) -> int:
    feedback = bin(state & taps).count("1") & 1
    return ((state << 1) & mask) | feedback


def generate_pn(config: LfsrConfig) -> PnSequence:
    """Generate one period of the m-sequence described by ``config``.

    Raises:
        NonMaximalTapsError: the register returns to its seed state before
            ``2**N - 1`` steps; the error carries the achieved period.
    """
    n = config.degree
    mask = (1 << n) - 1
    out_bit = n - 1
    chips = np.empty(config.length, dtype=np.uint8)
    state = config.initial_state
    for i in range(config.length):
        chips[i] = (state >> out_bit) & 1
        state = _step(state, config.taps, mask)
        if state == config.initial_state and i + 1 < config.length:
            raise NonMaximalTapsError(n, config.taps, i + 1)
    return PnSequence(chips, n, config)


def periodic_autocorrelation(seq: PnSequence, lag: int) -> float:
    """Unnormalized circular autocorrelation of the bipolar chips at ``lag``."""
    if not 0 <= lag < seq.length:
        raise InvalidLagError(f"lag {lag} outside 0..{seq.length - 1}")
    b = seq.bipolar()
    return float(np.dot(b, np.roll(b, -lag)))


def run_length_histogram(seq: PnSequence) -> dict:
    """Count runs of identical chips around the circular period.

    Returns a mapping ``(bit, run_length) -> count``.
    """
    chips = seq.chips
    edges = np.flatnonzero(chips != np.roll(chips, 1))
    # A constant sequence has one run spanning the whole period.
    start = int(edges[0]) if len(edges) else 0
    rotated = np.roll(chips, -start)
    hist: dict = {}
    for bit, group in itertools.groupby(rotated.tolist()):
        key = (int(bit), sum(1 for _ in group))
        hist[key] = hist.get(key, 0) + 1
    return hist

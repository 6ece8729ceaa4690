"""Closed-form microstrip and edge-coupled differential impedance.

All lengths are in mils.  The formulas are the classic IPC-style
approximations, commonly quoted as accurate for 0.1 <= w/h <= 3.0; outside
that window a warning is issued but the value is still returned.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

from .errors import (
    InvalidInputError,
    MissingParameterError,
    NonphysicalGeometryError,
    UnachievableTargetError,
)

MILS_PER_MM = 1000.0 / 25.4
W_OVER_H_RANGE = (0.1, 3.0)


def mm_to_mils(mm: float) -> float:
    return mm * MILS_PER_MM


@dataclass(frozen=True)
class StackupParams:
    h: float
    w: float
    t: float
    er: float
    d: Optional[float] = None

    def __post_init__(self):
        for name in ("h", "w", "t"):
            if not getattr(self, name) > 0:
                raise InvalidInputError(f"{name} must be positive, got {getattr(self, name)}")
        if self.d is not None and not self.d > 0:
            raise InvalidInputError(f"d must be positive, got {self.d}")
        if not self.er > 1:
            raise InvalidInputError(f"er must exceed 1, got {self.er}")
        lo, hi = W_OVER_H_RANGE
        if not lo <= self.w / self.h <= hi:
            warnings.warn(
                f"w/h = {self.w / self.h:.3g} outside {lo}..{hi}; the closed form is approximate there",
                stacklevel=3,
            )


def _log_ratio(h: float, w: float, t: float) -> float:
    ratio = 5.98 * h / (0.8 * w + t)
    if ratio <= 1:
        raise NonphysicalGeometryError(
            f"5.98h / (0.8w + t) = {ratio:.4g} <= 1: trace too wide for this dielectric height"
        )
    return math.log(ratio)


def microstrip_impedance(p: StackupParams) -> float:
    """Single-ended microstrip impedance, ohms."""
    return 87.0 / math.sqrt(p.er + 1.41) * _log_ratio(p.h, p.w, p.t)


def differential_impedance(p: StackupParams) -> float:
    """Edge-coupled microstrip pair impedance, ohms; needs ``p.d``."""
    if p.d is None:
        raise MissingParameterError("differential impedance needs the pair separation d")
    coupling = 1.0 - 0.48 * math.exp(-0.96 * p.d / p.h)
    return 174.0 / math.sqrt(p.er + 1.41) * _log_ratio(p.h, p.w, p.t) * coupling


def solve_width(target_z0: float, h: float, t: float, er: float) -> float:
    """Trace width giving ``target_z0`` ohms (exact inverse of the microstrip formula)."""
    if not target_z0 > 0:
        raise UnachievableTargetError(f"target impedance must be positive, got {target_z0}")
    w = (5.98 * h / math.exp(target_z0 * math.sqrt(er + 1.41) / 87.0) - t) / 0.8
    if w <= 0:
        raise UnachievableTargetError(
            f"{target_z0} ohm needs a non-positive width ({w:.4g} mils) with h={h}, t={t}, er={er}"
        )
    return w

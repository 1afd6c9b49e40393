"""Over-the-air latency of LTE transmissions with and without HARQ.

All durations are counted in TTIs and converted to milliseconds with the
frame configuration's TTI length. Arithmetic is exact (``Fraction``) so the
subslot configuration scales by exactly 1/6.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum
from fractions import Fraction
from numbers import Real

URLLC_LIMIT_MS = Fraction(1)
HRLLC_LIMIT_MS = Fraction(10)


class Direction(str, Enum):
    DL = "dl"
    UL = "ul"


class Scheme(str, Enum):
    HARQ = "harq"
    HARQLESS = "harqless"


class RequirementClass(str, Enum):
    URLLC = "U"
    HRLLC = "H"
    NEITHER = "-"


def _exact(x: Real) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True)
class LatencyComponents:
    """Per-hop delays in TTIs: L1/L2 processing, alignment, processing, transmission."""

    t_l1l2: Fraction = Fraction(1)
    t_align: Fraction = Fraction(1)
    t_proc: Fraction = Fraction(3)
    t_tx: Fraction = Fraction(1)

    def __post_init__(self):
        for name in ("t_l1l2", "t_align", "t_proc", "t_tx"):
            value = _exact(getattr(self, name))
            if value <= 0:
                raise ValueError(f"{name} must be strictly positive, got {value}")
            object.__setattr__(self, name, value)


DEFAULT_COMPONENTS = LatencyComponents()
REDUCED_PROCESSING = LatencyComponents(t_proc=Fraction(2))


@dataclass(frozen=True)
class FrameConfig:
    label: str
    tti_ms: Fraction
    components: LatencyComponents
    title: str = ""


REL14_SF = FrameConfig("rel14-sf", Fraction(1), DEFAULT_COMPONENTS, "Rel. 14 SF")
REL15_SF_N3 = FrameConfig("rel15-sf-n3", Fraction(1), REDUCED_PROCESSING, "Rel. 15 SF & n+3")
REL15_SLOT = FrameConfig("rel15-slot", Fraction(1, 2), DEFAULT_COMPONENTS, "Rel. 15 slot")
REL15_SUBSLOT = FrameConfig("rel15-subslot", Fraction(1, 6), DEFAULT_COMPONENTS, "Rel. 15 subslot")

FRAME_CONFIGS = {c.label: c for c in (REL14_SF, REL15_SF_N3, REL15_SLOT, REL15_SUBSLOT)}


@dataclass(frozen=True)
class LatencyScenario:
    config: FrameConfig
    direction: Direction
    scheme: Scheme
    k: int = 0
    sps: bool = False  # semi-persistent UL grant: no scheduling-request round trip

    def __post_init__(self):
        object.__setattr__(self, "direction", Direction(self.direction))
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if int(self.k) != self.k or self.k < 0:
            raise ValueError(f"k must be a nonnegative integer, got {self.k}")


@dataclass(frozen=True)
class LatencyBreakdown:
    constant: Fraction
    processing: Fraction
    transmission: Fraction

    @property
    def total(self) -> Fraction:
        return self.constant + self.processing + self.transmission


def constant_delay(c: LatencyComponents) -> Fraction:
    """Higher-layer and alignment delay, identical for every scheme."""
    return 2 * c.t_l1l2 + c.t_align


def decompose(s: LatencyScenario) -> LatencyBreakdown:
    c = s.config.components
    k = s.k
    # UL first pays a scheduling-request + grant round trip unless SPS is used
    k_ul = k if s.sps else k + 1
    if s.scheme is Scheme.HARQ:
        n = k if s.direction is Direction.DL else k_ul
        return LatencyBreakdown(constant_delay(c), 2 * n * c.t_proc, (1 + 2 * n) * c.t_tx)
    if s.direction is Direction.DL:
        return LatencyBreakdown(constant_delay(c), Fraction(0), (1 + k) * c.t_tx)
    return LatencyBreakdown(constant_delay(c), 2 * c.t_proc, (1 + 2 * k_ul) * c.t_tx)


def latency_ttis(s: LatencyScenario) -> Fraction:
    return decompose(s).total


def latency_ms_exact(s: LatencyScenario) -> Fraction:
    return latency_ttis(s) * s.config.tti_ms


def latency_ms(s: LatencyScenario) -> float:
    return float(latency_ms_exact(s))


def classify(latency_ms: Real) -> RequirementClass:
    value = _exact(latency_ms)
    if value < 0:
        raise ValueError(f"latency must be nonnegative, got {latency_ms}")
    if value <= URLLC_LIMIT_MS:
        return RequirementClass.URLLC
    if value <= HRLLC_LIMIT_MS:
        return RequirementClass.HRLLC
    return RequirementClass.NEITHER


def round_half_away(value: Real, digits: int = 1) -> Decimal:
    """Decimal rounding with ties away from zero, computed on the exact value."""
    q = Decimal(1).scaleb(-digits)
    frac = _exact(value)
    sign = -1 if frac < 0 else 1
    scaled = abs(frac) * 10 ** digits
    whole = scaled.numerator // scaled.denominator
    if scaled - whole >= Fraction(1, 2):
        whole += 1
    return (Decimal(sign * whole) * q).quantize(q, rounding=ROUND_HALF_UP)


@dataclass(frozen=True)
class TableCell:
    scheme: Scheme
    direction: Direction
    k: int
    config: FrameConfig
    exact_ms: Fraction

    @property
    def value_ms(self) -> Decimal:
        return round_half_away(self.exact_ms, 1)

    @property
    def verdict(self) -> RequirementClass:
        return classify(self.exact_ms)


def generate_table2(max_k: int = 3) -> list[TableCell]:
    """Every (scheme, direction, k, config) cell, in that nesting order."""
    cells = []
    for scheme in Scheme:
        for direction in Direction:
            for k in range(max_k + 1):
                for config in FRAME_CONFIGS.values():
                    s = LatencyScenario(config, direction, scheme, k)
                    cells.append(TableCell(scheme, direction, k, config, latency_ms_exact(s)))
    return cells


def with_components(config: FrameConfig, **changes) -> FrameConfig:
    return replace(config, components=replace(config.components, **changes))

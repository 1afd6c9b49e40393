from decimal import Decimal
from fractions import Fraction

import pytest

from urllc_lte import latency as lat
from urllc_lte.latency import Direction, RequirementClass, Scheme


def scenario(config, direction, scheme, k, sps=False):
    return lat.LatencyScenario(lat.FRAME_CONFIGS[config], direction, scheme, k, sps=sps)


@pytest.mark.parametrize("l1l2,align,expected", [(1, 1, 3), (Fraction(1, 2), 1, 2), (2, 3, 7)])
def test_constant_delay(l1l2, align, expected):
    c = lat.LatencyComponents(t_l1l2=l1l2, t_align=align)
    assert lat.constant_delay(c) == expected


@pytest.mark.parametrize("config,direction,scheme,k,ttis", [
    ("rel14-sf", "dl", "harq", 1, 12),
    ("rel14-sf", "ul", "harq", 0, 12),
    ("rel15-sf-n3", "ul", "harqless", 0, 10),
    ("rel14-sf", "dl", "harqless", 0, 4),
])
def test_latency_ttis_examples(config, direction, scheme, k, ttis):
    assert lat.latency_ttis(scenario(config, direction, scheme, k)) == ttis


def test_latency_ms_examples():
    assert lat.latency_ms_exact(scenario("rel15-subslot", "dl", "harq", 0)) == Fraction(4, 6)
    assert lat.latency_ms(scenario("rel15-slot", "ul", "harqless", 1)) == 7.0
    assert lat.latency_ms(scenario("rel15-subslot", "ul", "harqless", 3)) == pytest.approx(3.0)


@pytest.mark.parametrize("value,cls", [
    (Fraction(2, 3), RequirementClass.URLLC),
    (1.0, RequirementClass.URLLC),
    (Fraction(7, 6), RequirementClass.HRLLC),
    (10, RequirementClass.HRLLC),
    (12.0, RequirementClass.NEITHER),
])
def test_classify(value, cls):
    assert lat.classify(value) is cls


def test_classify_rejects_negative():
    with pytest.raises(ValueError):
        lat.classify(-0.1)


def test_classification_uses_unrounded_value():
    # 7/6 ms displays as 1.2, but 1.04 would display as 1.0 and still be HRLLC
    assert lat.classify(Fraction(104, 100)) is RequirementClass.HRLLC
    assert lat.round_half_away(Fraction(104, 100)) == Decimal("1.0")


@pytest.mark.parametrize("value,expected", [
    (Fraction(4, 6), "0.7"), (Fraction(5, 6), "0.8"), (Fraction(1, 4), "0.3"),
    (Fraction(-1, 4), "-0.3"), (Fraction(20, 6), "3.3"), (Fraction(28, 6), "4.7"), (36, "36.0"),
])
def test_round_half_away(value, expected):
    assert str(lat.round_half_away(value)) == expected


def test_table_matches_golden(latency_golden):
    cells = lat.generate_table2()
    assert len(cells) == 64
    for c in cells:
        value, marker = latency_golden[(c.scheme.value, c.direction.value, c.k, c.config.label)]
        assert c.value_ms == value, c
        assert c.verdict.value == marker, c


@pytest.mark.parametrize("scheme,direction,k,config,value,cls", [
    ("harq", "dl", 3, "rel15-subslot", "4.7", RequirementClass.HRLLC),
    ("harqless", "ul", 2, "rel15-slot", "8.0", RequirementClass.HRLLC),
    ("harq", "ul", 3, "rel14-sf", "36.0", RequirementClass.NEITHER),
])
def test_table_examples(scheme, direction, k, config, value, cls):
    cell = next(c for c in lat.generate_table2() if (c.scheme.value, c.direction.value, c.k,
                                                     c.config.label) == (scheme, direction, k, config))
    assert str(cell.value_ms) == value
    assert cell.verdict is cls


@pytest.mark.parametrize("config", sorted(lat.FRAME_CONFIGS))
@pytest.mark.parametrize("direction", list(Direction))
@pytest.mark.parametrize("scheme", list(Scheme))
def test_monotone_in_k(config, direction, scheme):
    values = [lat.latency_ttis(scenario(config, direction, scheme, k)) for k in range(6)]
    assert all(b > a for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("config", sorted(lat.FRAME_CONFIGS))
@pytest.mark.parametrize("k", range(4))
def test_harqless_never_slower_than_harq(config, k):
    for d in Direction:
        assert (lat.latency_ttis(scenario(config, d, "harqless", k))
                <= lat.latency_ttis(scenario(config, d, "harq", k)))


@pytest.mark.parametrize("scheme", list(Scheme))
@pytest.mark.parametrize("k", range(4))
def test_uplink_not_faster_than_downlink(scheme, k):
    for config in lat.FRAME_CONFIGS:
        assert (lat.latency_ttis(scenario(config, "ul", scheme, k))
                >= lat.latency_ttis(scenario(config, "dl", scheme, k)))


def test_ms_scales_with_tti_length():
    for d in Direction:
        for s in Scheme:
            sf = lat.latency_ttis(scenario("rel14-sf", d, s, 2))
            assert lat.latency_ms_exact(scenario("rel15-slot", d, s, 2)) == sf / 2
            assert lat.latency_ms_exact(scenario("rel15-subslot", d, s, 2)) == sf / 6


def test_sps_removes_scheduling_round_trip():
    for s in Scheme:
        for k in range(3):
            with_sps = lat.latency_ttis(scenario("rel14-sf", "ul", s, k, sps=True))
            assert with_sps < lat.latency_ttis(scenario("rel14-sf", "ul", s, k))
    # with SPS the UL HARQ path mirrors DL
    assert (lat.latency_ttis(scenario("rel14-sf", "ul", "harq", 1, sps=True))
            == lat.latency_ttis(scenario("rel14-sf", "dl", "harq", 1)))


def test_breakdown_sums_to_total():
    b = lat.decompose(scenario("rel15-subslot", "ul", "harqless", 3))
    assert (b.constant, b.processing, b.transmission) == (3, 6, 9)
    assert b.total == 18


@pytest.mark.parametrize("bad", [{"t_proc": 0}, {"t_tx": -1}, {"t_align": Fraction(0)}])
def test_components_must_be_positive(bad):
    with pytest.raises(ValueError):
        lat.LatencyComponents(**bad)


def test_negative_k_rejected():
    with pytest.raises(ValueError):
        scenario("rel14-sf", "dl", "harq", -1)


def test_with_components_overrides_processing():
    cfg = lat.with_components(lat.REL14_SF, t_proc=Fraction(2))
    s = lat.LatencyScenario(cfg, "ul", "harq", 0)
    assert lat.latency_ttis(s) == lat.latency_ttis(scenario("rel15-sf-n3", "ul", "harq", 0))

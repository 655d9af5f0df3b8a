import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gnssdobench.core import RandomStream, split_stream
from gnssdobench.gnss import GnssTimeline, fix_available, fix_mask, reference_pps, reference_pps_series


def test_fix_available_examples():
    tl = GnssTimeline(outages=((100.0, 50.0),), fix_acquire_delay=10.0)
    assert not fix_available(tl, 5.0)
    assert fix_available(tl, 10.0)
    assert not fix_available(tl, 120.0)
    assert fix_available(tl, 150.0)
    assert fix_available(GnssTimeline(), 0.0)
    with pytest.raises(ValueError):
        fix_available(tl, -1.0)


def test_timeline_validation():
    with pytest.raises(ValueError):
        GnssTimeline(outages=((10.0, 20.0), (15.0, 5.0)))
    with pytest.raises(ValueError):
        GnssTimeline(outages=((10.0, 0.0),))
    with pytest.raises(ValueError):
        GnssTimeline(rx_jitter_sigma=-1e-9)


def test_with_outages_merges_overlaps():
    tl = GnssTimeline(outages=((10.0, 10.0),)).with_outages([(15.0, 10.0), (40.0, 5.0)])
    assert tl.outages == ((10.0, 15.0), (40.0, 5.0))


def test_reference_pps_without_jitter_is_exact():
    tl = GnssTimeline()
    for k in (0, 1, 17, 123456):
        assert reference_pps(tl, k, RandomStream(1)) == float(k)


def test_reference_pps_absent_inside_outage():
    tl = GnssTimeline(outages=((5.0, 3.0),), rx_jitter_sigma=1e-9)
    assert reference_pps(tl, 6, RandomStream(1)) is None
    assert reference_pps(tl, 8, RandomStream(1)) is not None
    with pytest.raises(ValueError):
        reference_pps(tl, -1, RandomStream(1))


def test_jitter_standard_deviation():
    sigma = 10e-9
    tl = GnssTimeline(rx_jitter_sigma=sigma)
    t = reference_pps_series(tl, 10_000, RandomStream(3))
    jitter = t - np.arange(10_000)
    assert jitter.std(ddof=1) == pytest.approx(sigma, rel=0.05)


def test_scalar_and_vector_forms_agree():
    tl = GnssTimeline(outages=((4000.0, 300.0),), fix_acquire_delay=20.0, rx_jitter_sigma=5e-9)
    rng = RandomStream(8)
    series = reference_pps_series(tl, 9000, rng)
    for k in (0, 19, 20, 4095, 4096, 4100, 4300, 8999):
        v = reference_pps(tl, k, rng)
        assert (v is None and np.isnan(series[k])) or v == series[k]


def test_jitter_independent_across_devices():
    tl = GnssTimeline(rx_jitter_sigma=1e-9)
    base = RandomStream(1)
    a = reference_pps_series(tl, 5000, split_stream(base, 0)) - np.arange(5000)
    b = reference_pps_series(tl, 5000, split_stream(base, 1)) - np.arange(5000)
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.05
    assert abs(np.corrcoef(a[1:], a[:-1])[0, 1]) < 0.05


def test_satellites_zero_without_fix():
    tl = GnssTimeline(outages=((10.0, 5.0),), quality=((0.0, 8), (20.0, 11)))
    assert tl.satellites(5.0) == 8
    assert tl.satellites(12.0) == 0
    assert tl.satellites(25.0) == 11


outage_lists = st.lists(st.tuples(st.integers(0, 400), st.integers(1, 60)), max_size=5)


@given(outage_lists, st.integers(0, 50))
def test_availability_fully_determined_by_timeline(raw, delay):
    spans, end = [], 0
    for start, dur in sorted(raw):
        start = max(start, end)
        spans.append((float(start), float(dur)))
        end = start + dur
    tl = GnssTimeline(outages=tuple(spans), fix_acquire_delay=float(delay), rx_jitter_sigma=1e-9)
    mask = fix_mask(tl, 600)
    assert mask.tolist() == [fix_available(tl, float(k)) for k in range(600)]
    a = reference_pps_series(tl, 600, RandomStream(1))
    b = reference_pps_series(tl, 600, RandomStream(2))
    assert np.array_equal(np.isnan(a), ~mask) and np.array_equal(np.isnan(b), ~mask)

import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from gnssdobench.core import RandomStream
from gnssdobench.metrics import overlapping_adev
from gnssdobench.noise import (AgingModel, NoiseModel, WarmupModel, adev_theory, aging_y, gen_powerlaw_y,
                               kasdin_walter_filter, warmup_y)


def phase(y, tau0=1.0):
    return np.concatenate(([0.0], np.cumsum(y) * tau0))


def test_zero_model_gives_zeros():
    y = gen_powerlaw_y(NoiseModel(), 100, 1.0, RandomStream(1))
    assert np.all(y == 0.0)


def test_generation_is_deterministic():
    model = NoiseModel(h2=1e-20, h0=1e-22, hm1=1e-26)
    a = gen_powerlaw_y(model, 5000, 1.0, RandomStream(9))
    b = gen_powerlaw_y(model, 5000, 1.0, RandomStream(9))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, gen_powerlaw_y(model, 5000, 1.0, RandomStream(10)))


def test_components_draw_from_separate_streams():
    wfm = NoiseModel(h0=1e-22)
    both = NoiseModel(h0=1e-22, hm2=1e-30)
    a = gen_powerlaw_y(wfm, 2000, 1.0, RandomStream(4))
    b = gen_powerlaw_y(both, 2000, 1.0, RandomStream(4))
    rw = gen_powerlaw_y(both.only(-2), 2000, 1.0, RandomStream(4))
    np.testing.assert_allclose(b - rw, a, atol=1e-25)


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        NoiseModel(h0=-1.0)
    with pytest.raises(ValueError):
        gen_powerlaw_y(NoiseModel(h0=1.0), 0, 1.0, RandomStream(1))


@pytest.mark.parametrize("alpha, head", [(0, [1, 0, 0, 0]), (-2, [1, 1, 1, 1]), (2, [1, -1, 0, 0]),
                                         (-1, [1, 0.5, 0.375, 0.3125])])
def test_kasdin_walter_taps(alpha, head):
    np.testing.assert_allclose(kasdin_walter_filter(alpha, 4), head)


def test_white_fm_adev_at_one_second():
    h0 = 2e-22
    y = gen_powerlaw_y(NoiseModel(h0=h0), 10**6, 1.0, RandomStream(5))
    assert overlapping_adev(phase(y), 1) == pytest.approx(math.sqrt(h0 / 2), rel=0.15)


@pytest.mark.parametrize("alpha", [2, 1, 0, -1, -2])
def test_single_component_matches_theory(alpha):
    # order-of-magnitude agreement with the closed forms at tau = 10 s
    model = NoiseModel(1e-20, 1e-20, 1e-22, 1e-24, 1e-28).only(alpha)
    y = gen_powerlaw_y(model, 2**17, 1.0, RandomStream(2))
    ratio = overlapping_adev(phase(y), 10) / adev_theory(model, 10.0, 1.0)
    assert 0.6 < ratio < 1.6


def test_sum_bounded_by_rss_of_components():
    base = NoiseModel(h2=1e-20, h0=1e-22, hm1=1e-25, hm2=1e-29)
    n, rng = 2**17, RandomStream(12)
    total = phase(gen_powerlaw_y(base, n, 1.0, rng))
    parts = [phase(gen_powerlaw_y(base.only(a), n, 1.0, rng)) for a in (2, 0, -1, -2)]
    for m in (1, 10, 100, 1000):
        rss = math.sqrt(sum(overlapping_adev(p, m) ** 2 for p in parts))
        assert overlapping_adev(total, m) <= 1.2 * rss
        assert overlapping_adev(total, m) >= 0.8 * rss


@pytest.mark.parametrize("alpha", [2, 0])
def test_white_components_have_zero_mean(alpha):
    model = NoiseModel(h2=1e-20, h0=1e-22).only(alpha)
    y = gen_powerlaw_y(model, 10**5, 1.0, RandomStream(77))
    se = y.std(ddof=1) / math.sqrt(y.size)
    assert abs(y.mean()) < 5 * se


def test_warmup_examples():
    w = WarmupModel(amplitude=1e-8, tau=300.0)
    assert warmup_y(w, 0.0) == 1e-8
    assert warmup_y(w, 1e6) == pytest.approx(0.0, abs=1e-300)
    assert w.phase(1e7) == pytest.approx(3e-6, rel=1e-12)
    t = np.linspace(0, 3000, 7)
    np.testing.assert_allclose(warmup_y(w, t), 1e-8 * np.exp(-t / 300.0))
    with pytest.raises(ValueError):
        warmup_y(w, -1.0)
    with pytest.raises(ValueError):
        WarmupModel(tau=0.0)


def test_warmup_phase_is_integral_of_frequency():
    from scipy.integrate import quad

    w = WarmupModel(amplitude=3e-9, tau=500.0, amplitude2=-1e-9, tau2=90.0, offset=2e-12)
    for t in (10.0, 700.0, 5000.0):
        ref, _ = quad(lambda s: warmup_y(w, s), 0.0, t)
        assert float(w.phase(t)) == pytest.approx(ref, rel=1e-9)


def test_aging_examples():
    assert aging_y(AgingModel(0.0), 1234.0) == 0.0
    assert aging_y(AgingModel(1e-12), 3600.0) == pytest.approx(3.6e-9)
    # closed-form phase 1/2 a t^2
    t = np.arange(3601.0)
    y = aging_y(AgingModel(1e-12), t)
    assert trapezoid(y, t) == pytest.approx(6.48e-6, rel=1e-12)
    with pytest.raises(ValueError):
        AgingModel(2e-9)
    with pytest.raises(ValueError):
        aging_y(AgingModel(1e-12), -1.0)

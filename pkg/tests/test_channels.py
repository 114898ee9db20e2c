"""Tests for the packet link, the q-ary symmetric channel and the Gaussian MAC."""

from __future__ import annotations

import numpy as np
import pytest

from goalcomm.channels import (
    DeterministicDelay,
    DiscreteChannel,
    GaussianMAC,
    LinkModel,
    PowerLimitError,
    ShiftedExponential,
    mac_superpose,
    message_to_symbols,
    qsc_transmit,
    symbols_to_message,
    transmit,
)
from goalcomm.sim.kernel import Simulator
from goalcomm.sim.rng import RngStream


class TestLink:
    def test_lossless_deterministic_link(self, rng: RngStream) -> None:
        link = LinkModel(DeterministicDelay(7))
        delivery = transmit(link, "pkt", 100, rng)
        assert delivery is not None
        assert delivery.time == 107
        assert delivery.packet == "pkt"

    def test_erasure_frequency(self, rng: RngStream) -> None:
        link = LinkModel(erasure_prob=0.3)
        n = 20_000
        lost = sum(transmit(link, i, 0, rng) is None for i in range(n))
        assert lost / n == pytest.approx(0.3, abs=0.015)

    def test_shifted_exponential_delay(self, rng: RngStream) -> None:
        delay = ShiftedExponential(d0=5, rate=10.0)
        draws = np.array([delay.sample(rng) for _ in range(20_000)])
        assert draws.min() >= 5
        # excess has mean 1/rate = 0.1 s = 100 ticks
        assert draws.mean() == pytest.approx(105, rel=0.03)

    def test_erasure_draws_do_not_shift_delays(self) -> None:
        delay = ShiftedExponential(d0=0, rate=2.0)
        a, b = RngStream(9, "link"), RngStream(9, "link")
        lossless = [transmit(LinkModel(delay), i, 0, a) for i in range(200)]
        lossy = [transmit(LinkModel(delay, erasure_prob=0.5), i, 0, b) for i in range(200)]
        assert any(y is None for y in lossy)
        for x, y in zip(lossless, lossy):
            assert x is not None
            if y is not None:
                assert y.time == x.time

    def test_delivery_is_scheduled_on_simulator(self, sim: Simulator, rng: RngStream) -> None:
        got: list[object] = []
        sim.on("delivery", lambda s, e: got.append((s.now, e.data)))
        transmit(LinkModel(DeterministicDelay(3)), "hello", 0, rng, sim=sim)
        sim.run_until(10)
        assert got == [(3, "hello")]

    def test_invalid_parameters_rejected(self) -> None:
        with pytest.raises(ValueError):
            LinkModel(erasure_prob=1.0)
        with pytest.raises(ValueError):
            DeterministicDelay(-1)
        with pytest.raises(ValueError):
            ShiftedExponential(d0=0, rate=0.0)


class TestDiscreteChannel:
    def test_noiseless_channel_is_identity(self, rng: RngStream) -> None:
        sent = rng.integers(0, 4, size=1000)
        assert np.array_equal(qsc_transmit(DiscreteChannel(q=4), sent, rng), sent)

    def test_error_rate_and_uniform_errors(self, rng: RngStream) -> None:
        channel = DiscreteChannel(q=4, epsilon=0.2)
        sent = np.zeros(60_000, dtype=np.int64)
        out = qsc_transmit(channel, sent, rng)
        wrong = out[out != 0]
        assert wrong.size / sent.size == pytest.approx(0.2, abs=0.01)
        counts = np.bincount(wrong, minlength=4)[1:]
        assert np.all(np.abs(counts / wrong.size - 1 / 3) < 0.02)

    def test_output_independent_of_input_at_uniform_noise(self, rng: RngStream) -> None:
        channel = DiscreteChannel(q=2, epsilon=0.0)
        assert channel.uniform_noise_epsilon == 0.5
        noisy = DiscreteChannel(q=2, epsilon=0.5)
        zeros = qsc_transmit(noisy, np.zeros(40_000, dtype=np.int64), rng)
        ones = qsc_transmit(noisy, np.ones(40_000, dtype=np.int64), rng)
        assert zeros.mean() == pytest.approx(0.5, abs=0.01)
        assert ones.mean() == pytest.approx(0.5, abs=0.01)

    def test_out_of_alphabet_symbol_rejected(self, rng: RngStream) -> None:
        with pytest.raises(ValueError):
            qsc_transmit(DiscreteChannel(q=2), [0, 2], rng)

    def test_epsilon_one_rejected(self) -> None:
        with pytest.raises(ValueError):
            DiscreteChannel(epsilon=1.0)

    def test_message_capacity(self) -> None:
        assert DiscreteChannel(q=2, uses=2).message_capacity == 4

    def test_message_digits(self) -> None:
        assert message_to_symbols(5, 2, 3).tolist() == [1, 0, 1]
        assert symbols_to_message([1, 0, 1], 2) == 5
        assert message_to_symbols(0, 3, 2).tolist() == [0, 0]

    def test_oversized_message_rejected(self) -> None:
        with pytest.raises(ValueError):
            message_to_symbols(4, 2, 2)


class TestGaussianMAC:
    def test_noiseless_unit_gains_sum_exactly(self, rng: RngStream) -> None:
        x = rng.uniform(-1, 1, size=(5, 8))
        out = mac_superpose(GaussianMAC(5), x, rng)
        assert np.allclose(out.received, x.sum(axis=0))
        assert out.included == (0, 1, 2, 3, 4)

    def test_channel_inversion_undoes_gains(self, rng: RngStream) -> None:
        x = rng.uniform(-1, 1, size=(3, 4))
        mac = GaussianMAC(3, gains=(0.5, 2.0, -1.5))
        assert np.allclose(mac_superpose(mac, x, rng).received, x.sum(axis=0))

    def test_truncation_excludes_weak_devices(self, rng: RngStream) -> None:
        mac = GaussianMAC(3, gains=(1.0, 0.05, 1.0), threshold=0.1)
        x = np.ones((3, 2))
        out = mac_superpose(mac, x, rng)
        assert out.excluded == (1,)
        assert mac.excluded() == frozenset({1})
        assert np.allclose(out.received, 2.0)

    def test_power_limit(self, rng: RngStream) -> None:
        mac = GaussianMAC(1, gains=(0.1,), p_max=10.0)
        with pytest.raises(PowerLimitError):
            mac_superpose(mac, [[1.0, 1.0]], rng)

    def test_zero_gain_without_truncation_cannot_be_inverted(self, rng: RngStream) -> None:
        mac = GaussianMAC(2, gains=(1.0, 0.0))
        assert mac.excluded() == frozenset()
        with pytest.raises(PowerLimitError):
            mac_superpose(mac, np.ones((2, 3)), rng)

    def test_zero_gain_below_threshold_is_excluded(self, rng: RngStream) -> None:
        mac = GaussianMAC(2, gains=(1.0, 0.0), threshold=0.1)
        out = mac_superpose(mac, np.ones((2, 3)), rng)
        assert out.excluded == (1,)
        assert np.allclose(out.received, 1.0)

    def test_receiver_noise_variance(self, rng: RngStream) -> None:
        mac = GaussianMAC(2, noise_var=0.25)
        out = mac_superpose(mac, np.zeros((2, 50_000)), rng)
        assert out.received.var() == pytest.approx(0.25, rel=0.03)

    def test_mismatched_shapes_rejected(self, rng: RngStream) -> None:
        with pytest.raises(ValueError):
            mac_superpose(GaussianMAC(2), [[1.0, 2.0], [1.0]], rng)

import numpy as np
import pytest
from numpy.testing import assert_allclose

from spikerl.core.errors import ContractViolation
from spikerl.networks.lif import LifLayerState, lif_step, smooth_spike, surrogate_grad


class TestSurrogateGrad:
    def test_peak_at_threshold(self):
        for k in (1.0, 2.0, 25.0, 100.0):
            assert surrogate_grad(0.0, k) == pytest.approx(1.0)

    def test_known_value(self):
        assert surrogate_grad(0.5, 100.0) == pytest.approx(1.0 / 51.0**2)

    def test_decreases_with_distance_and_slope(self):
        x = np.linspace(-3.0, 3.0, 10_001)
        for k in (1.0, 10.0, 100.0):
            g = surrogate_grad(x, k)
            assert np.all(g > 0.0) and np.all(g <= 1.0)
            order = np.argsort(np.abs(x), kind="stable")
            assert np.all(np.diff(g[order]) <= 1e-15)
        nonzero = x[x != 0.0]
        assert np.all(surrogate_grad(nonzero, 50.0) < surrogate_grad(nonzero, 5.0))

    def test_symmetric(self):
        x = np.linspace(0.0, 2.0, 101)
        assert_allclose(surrogate_grad(x, 7.0), surrogate_grad(-x, 7.0))

    def test_smooth_spike_derivative_is_surrogate(self):
        x = np.array([-1.3, -0.4, -0.05, 0.03, 0.2, 0.9])
        eps = 1e-6
        for k in (1.0, 4.0, 30.0):
            numeric = (smooth_spike(x + eps, k) - smooth_spike(x - eps, k)) / (2 * eps)
            assert_allclose(numeric, surrogate_grad(x, k), rtol=1e-6)


class TestLifStep:
    def test_soft_reset(self):
        state = LifLayerState(membrane=np.array([0.5]), spikes=np.zeros(1), leak=0.9, threshold=1.0)
        spikes, nxt = lif_step(state, np.array([0.7]))
        assert spikes[0] == 1.0
        assert nxt.membrane[0] == pytest.approx(0.15)

    def test_spike_condition_is_strict(self):
        state = LifLayerState.zeros(1)
        spikes, nxt = lif_step(state, np.array([1.0]))
        assert spikes[0] == 0.0
        assert nxt.membrane[0] == pytest.approx(1.0)

    def test_leak_without_input(self):
        state = LifLayerState(membrane=np.array([0.8, -0.4]), spikes=np.zeros(2), leak=0.5)
        spikes, nxt = lif_step(state, np.zeros(2))
        assert_allclose(spikes, [0.0, 0.0])
        assert_allclose(nxt.membrane, [0.4, -0.2])

    def test_does_not_mutate_input_state(self):
        state = LifLayerState.zeros(3)
        lif_step(state, np.full(3, 2.0))
        assert_allclose(state.membrane, np.zeros(3))

    def test_batched_shapes(self):
        state = LifLayerState.zeros((4, 6))
        spikes, nxt = lif_step(state, np.ones((4, 6)) * 1.5)
        assert spikes.shape == (4, 6)
        assert_allclose(nxt.membrane, 0.5)

    def test_shape_mismatch(self):
        with pytest.raises(ContractViolation):
            lif_step(LifLayerState.zeros(3), np.zeros(4))

    def test_bad_leak(self):
        state = LifLayerState.zeros(2, leak=1.5)
        with pytest.raises(ContractViolation):
            lif_step(state, np.zeros(2))

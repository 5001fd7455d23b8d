import numpy as np
import pytest
from numpy.testing import assert_allclose

from spikerl.core.errors import ContractViolation
from spikerl.networks.mlp import SIGMOID, MlpNetwork
from spikerl.networks.snn import SnnPolicy
from spikerl.surrogate.diagnostics import (
    SWEEP_COLUMNS,
    gradient_cosine_similarity,
    layer_gradient_magnitudes,
    make_input_batch,
    run_slope_sweep,
)
from spikerl.surrogate.schedule import (
    ADAPTIVE,
    FIXED,
    INTERVAL,
    SlopeSchedule,
    doubling_intervals,
    normalize_score,
    update_adaptive_slope,
)
from spikerl.utils.misc import read_csv


def _feed(sched, scores):
    k = None
    for s in scores:
        k = update_adaptive_slope(sched, s)
    return k


class TestAdaptiveSlope:
    def test_linear_ramp(self):
        assert _feed(SlopeSchedule(mode=ADAPTIVE), np.arange(0, 200, 20)) == pytest.approx(55.0)

    def test_constant_scores(self):
        assert _feed(SlopeSchedule(mode=ADAPTIVE), [100.0] * 10) == pytest.approx(50.0)
        assert _feed(SlopeSchedule(mode=ADAPTIVE), [0.0] * 10) == pytest.approx(1.0)
        assert _feed(SlopeSchedule(mode=ADAPTIVE), [250.0] * 10) == pytest.approx(100.0)

    def test_single_score_has_no_rate(self):
        assert _feed(SlopeSchedule(mode=ADAPTIVE), [40.0]) == pytest.approx(20.0)

    def test_window_keeps_latest_scores(self):
        sched = SlopeSchedule(mode=ADAPTIVE, window_size=10)
        _feed(sched, range(25))
        assert_allclose(sched.window(), np.arange(15, 25))

    def test_rate_includes_change_from_evicted_score(self):
        sched = SlopeSchedule(mode=ADAPTIVE, window_size=10)
        # the jump from 0 to 100 has left the window but still counts as one of ten changes
        assert _feed(sched, [0.0] + [100.0] * 10) == pytest.approx(55.0)
        assert _feed(sched, [100.0]) == pytest.approx(50.0)

    def test_restored_evicted_score(self):
        sched = SlopeSchedule(mode=ADAPTIVE, window_size=3)
        sched.restore_window([10.0, 20.0, 30.0], evicted=0.0)
        # window 20, 30, 40 with changes 10, 10, 10 from the evicted 10
        assert update_adaptive_slope(sched, 40.0) == pytest.approx(0.5 * 30.0 + 0.5 * 10.0)
        assert sched.evicted_score == 10.0

    def test_rejects_other_modes(self):
        with pytest.raises(ContractViolation):
            update_adaptive_slope(SlopeSchedule(mode=FIXED), 50.0)

    def test_on_epoch_normalizes_raw_reward(self):
        sched = SlopeSchedule(mode=ADAPTIVE)
        # raw 450 maps to a score of 100
        assert sched.on_epoch(0, 450.0) == pytest.approx(50.0)


class TestSchedules:
    def test_doubling_intervals(self):
        assert doubling_intervals(2.0, 100, 100.0) == [
            (0, 2.0),
            (100, 4.0),
            (200, 8.0),
            (300, 16.0),
            (400, 32.0),
            (500, 64.0),
            (600, 100.0),
        ]

    def test_interval_mode(self):
        sched = SlopeSchedule(mode=INTERVAL)
        assert sched.interval_value(250) == 8.0
        ks = [sched.on_epoch(e) for e in range(0, 800, 10)]
        assert np.all(np.diff(ks) >= 0.0)
        assert ks[0] == 2.0 and ks[-1] == 100.0

    def test_interval_mode_repeats_on_rerun(self):
        runs = []
        for _ in range(2):
            sched = SlopeSchedule(mode=INTERVAL, interval_steps=doubling_intervals(1.0, 25, 100.0))
            runs.append([sched.on_epoch(e, raw_reward=float(e)) for e in range(300)])
        assert runs[0] == runs[1]
        assert runs[0][0] == 1.0 and runs[0][-1] == 100.0

    def test_fixed_mode_never_changes(self):
        sched = SlopeSchedule(mode=FIXED, k=7.0)
        assert {sched.on_epoch(e, raw_reward=300.0) for e in range(50)} == {7.0}

    def test_decreasing_intervals_rejected(self):
        with pytest.raises(ContractViolation):
            SlopeSchedule(mode=INTERVAL, interval_steps=[(0, 10.0), (5, 2.0)])

    def test_unknown_mode(self):
        with pytest.raises(ContractViolation):
            SlopeSchedule(mode="cosine")

    def test_normalize_score(self):
        assert normalize_score(-200.0) == 0.0
        assert normalize_score(450.0) == 100.0
        assert normalize_score(125.0) == pytest.approx(50.0)
        assert normalize_score(-1e6) == 0.0
        assert normalize_score(1e6) == 100.0


class TestDiagnostics:
    def test_one_stat_per_weight_matrix(self, rng):
        net = SnnPolicy([8, 16, 16, 4], rng=rng)
        stats = layer_gradient_magnitudes(net, make_input_batch(net, rng, batch_size=4, steps=5), k=2.0)
        assert [s.layer_index for s in stats] == [0, 1, 2]
        for s in stats:
            assert s.mean_abs_grad >= 0.0
            assert 0.0 <= s.zero_fraction <= 1.0

    def test_self_similarity(self, rng):
        for net in (SnnPolicy([8, 16, 16, 4], rng=rng, gain=3.0), MlpNetwork([8, 16, 4], activation=SIGMOID, rng=rng)):
            batch = make_input_batch(net, rng, batch_size=4, steps=5)
            stats = gradient_cosine_similarity(net, batch, k_shallow=5.0, k_ref=5.0)
            for s in stats:
                if not np.isnan(s.cosine_to_ref):
                    assert s.cosine_to_ref == pytest.approx(1.0, abs=1e-12)
            # the decoder never sees the slope
            assert stats[-1].cosine_to_ref == pytest.approx(1.0, abs=1e-12)

    def test_single_input_network_cosines_are_signs(self, rng):
        for _ in range(5):
            net = MlpNetwork([1, 1, 1], activation=SIGMOID, rng=rng)
            batch = make_input_batch(net, rng, batch_size=1)
            for s in gradient_cosine_similarity(net, batch, k_shallow=1.0, k_ref=100.0):
                assert min(abs(s.cosine_to_ref - c) for c in (-1.0, 0.0, 1.0)) < 1e-12

    def test_zero_gradient_layer_is_undefined(self, rng):
        net = SnnPolicy([4, 6, 2], rng=rng)
        batch = make_input_batch(net, rng, batch_size=2, steps=3)
        batch.output_grads[...] = 0.0
        stats = gradient_cosine_similarity(net, batch, k_shallow=1.0, k_ref=100.0)
        assert all(np.isnan(s.cosine_to_ref) for s in stats)

    def test_shallow_slope_must_not_exceed_reference(self, rng):
        net = SnnPolicy([4, 6, 2], rng=rng)
        with pytest.raises(ContractViolation):
            gradient_cosine_similarity(net, k_shallow=200.0, k_ref=100.0, rng=rng)

    def test_shallow_slopes_give_larger_gradients(self, rng):
        net = SnnPolicy([8, 16, 16, 16, 4], rng=rng)
        batch = make_input_batch(net, rng, batch_size=8, steps=6)
        shallow = layer_gradient_magnitudes(net, batch, k=1.0)
        steep = layer_gradient_magnitudes(net, batch, k=100.0)
        for a, b in zip(shallow[:-1], steep[:-1]):
            assert a.mean_abs_grad > b.mean_abs_grad
        assert shallow[-1].mean_abs_grad == pytest.approx(steep[-1].mean_abs_grad)

    def test_sweep_writes_csv(self, tmp_path):
        out = str(tmp_path / "sweep.csv")
        rows = run_slope_sweep([1.0, 10.0], trials=2, layers=2, neurons=8, out=out, seed=3, in_dim=6, out_dim=3)
        assert len(rows) == 2 * 3
        written = read_csv(out)
        assert list(written[0].keys()) == SWEEP_COLUMNS
        assert len(written) == len(rows)
        assert [float(r["slope"]) for r in written] == [1.0, 1.0, 1.0, 10.0, 10.0, 10.0]

    def test_sweep_is_deterministic(self):
        a = run_slope_sweep([2.0], trials=3, layers=2, neurons=8, seed=11, in_dim=6, out_dim=3)
        b = run_slope_sweep([2.0], trials=3, layers=2, neurons=8, seed=11, in_dim=6, out_dim=3)
        assert a == b or all(
            np.allclose([x[c] for c in SWEEP_COLUMNS], [y[c] for c in SWEEP_COLUMNS], equal_nan=True)
            for x, y in zip(a, b)
        )

    @pytest.mark.slow
    def test_shallow_slopes_misalign_deep_layers(self):
        rows = run_slope_sweep([1.0, 100.0], trials=100, layers=4, neurons=64, seed=0)
        by_key = {(r["slope"], r["layer"]): r for r in rows}
        layers = sorted({r["layer"] for r in rows})
        assert by_key[(1.0, 0)]["mean_abs_grad"] >= 10.0 * by_key[(100.0, 0)]["mean_abs_grad"]
        cos = [by_key[(1.0, i)]["cosine_to_ref"] for i in layers]
        assert cos[-1] == pytest.approx(1.0)
        assert cos[0] < 0.3
        # alignment only degrades moving from the output towards the input
        assert all(a <= b for a, b in zip(cos, cos[1:]))
        assert cos[-2] > cos[0]

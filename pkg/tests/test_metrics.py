import numpy as np
import pytest
from numpy.testing import assert_allclose

from spikerl.core.errors import ContractViolation
from spikerl.metrics.energy import EnergyModel, energy_terms, estimate_energy
from spikerl.metrics.ops import (
    ann_reference_report,
    count_dense_synops,
    effective_ops,
    footprint_kb,
    footprint_kb_for_sizes,
    format_ops_table,
    layer_sparsity,
    measure_activation_sparsity,
    snn_ops_report,
)
from spikerl.networks.snn import SnnPolicy


class TestCounts:
    def test_dense_synops(self):
        assert count_dense_synops([18, 256, 128, 4]) == 37888
        assert count_dense_synops([146, 64, 64, 4]) == 13696

    def test_effective_ops_at_reference_sparsity(self):
        macs, acs = effective_ops([18, 256, 128, 4], 0.79)
        assert macs == pytest.approx(4608.0)
        assert acs == pytest.approx(6988.8)

    def test_encoder_as_accumulates(self):
        macs, acs = effective_ops([18, 256, 128, 4], 0.79, encoder_is_mac=False)
        assert macs == 0.0
        assert acs == pytest.approx(4608.0 + 6988.8)

    def test_per_layer_sparsity(self):
        _, acs = effective_ops([18, 256, 128, 4], [0.5, 1.0])
        assert acs == pytest.approx(0.5 * 256 * 128)
        with pytest.raises(ContractViolation):
            effective_ops([18, 256, 128, 4], [0.5])
        with pytest.raises(ContractViolation):
            effective_ops([18, 256, 128, 4], 1.5)

    def test_footprints(self):
        assert footprint_kb(SnnPolicy()) == pytest.approx(152.515625)
        assert footprint_kb_for_sizes([18, 256, 128, 4], spiking=True) == pytest.approx(152.515625)
        assert footprint_kb_for_sizes([146, 64, 64, 4], spiking=False) == pytest.approx(54.015625)


class TestEnergy:
    def test_reference_energy(self):
        assert estimate_energy(EnergyModel()) == pytest.approx(9.74167e-5, rel=1e-5)

    def test_terms_reassemble_energy(self):
        model = EnergyModel(activation_sparsity=0.6)
        terms = energy_terms(model)
        assert terms @ np.array([model.p_s, model.p_w, model.p_u]) == pytest.approx(estimate_energy(model))

    def test_sparser_is_cheaper(self):
        assert estimate_energy(EnergyModel(activation_sparsity=0.9)) < estimate_energy(
            EnergyModel(activation_sparsity=0.5)
        )

    def test_invalid_model(self):
        with pytest.raises(ContractViolation):
            EnergyModel(activation_sparsity=1.2)
        with pytest.raises(ContractViolation):
            EnergyModel(p_s=-1.0)


class TestSparsity:
    def test_silent_network(self, rng):
        policy = SnnPolicy([18, 16, 8, 4], rng=rng).zero_()
        obs = rng.normal(size=(30, 18))
        assert measure_activation_sparsity(policy, obs) == 1.0
        assert layer_sparsity(policy, obs) == [1.0, 1.0]

    def test_always_firing_network(self, rng):
        policy = SnnPolicy([18, 16, 8, 4], rng=rng).zero_()
        for b in policy.biases[:-1]:
            b[...] = 5.0
        assert measure_activation_sparsity(policy, rng.normal(size=(10, 18))) == 0.0

    def test_rejects_empty_trajectory(self, rng):
        with pytest.raises(ContractViolation):
            measure_activation_sparsity(SnnPolicy(rng=rng), np.zeros((0, 18)))


class TestReports:
    def test_reference_report_without_trajectory(self, rng):
        report = snn_ops_report(SnnPolicy(rng=rng))
        assert report.activation_sparsity == pytest.approx(0.79)
        assert report.dense_synops == 37888
        assert report.eff_acs == pytest.approx(6988.8)
        assert report.energy_mj == pytest.approx(9.74167e-5, rel=1e-5)

    def test_measured_report(self, rng):
        policy = SnnPolicy(rng=rng, gain=2.0)
        report = snn_ops_report(policy, rng.normal(size=(50, 18)))
        assert 0.0 <= report.activation_sparsity <= 1.0
        assert len(report.per_layer_sparsity) == 2
        assert report.eff_acs_reference == pytest.approx(6988.8)

    def test_ann_reference(self):
        report = ann_reference_report()
        assert report.dense_synops == 13696
        assert report.eff_macs == 13696.0 and report.eff_acs == 0.0
        assert report.footprint_kb == pytest.approx(54.015625)

    def test_table_lists_every_report(self, rng):
        table = format_ops_table({"SNN": snn_ops_report(SnnPolicy(rng=rng)), "ANN": ann_reference_report()})
        lines = table.splitlines()
        assert len(lines) == 4
        assert lines[2].startswith("SNN") and lines[3].startswith("ANN")

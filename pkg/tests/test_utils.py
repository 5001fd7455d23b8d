import json

import numpy as np
import pytest

from spikerl.core.errors import ContractViolation
from spikerl.utils.config import load_config_file
from spikerl.utils.logging import log_event, setup_events_logger
from spikerl.utils.misc import SEED_STREAMS, read_csv, seed_streams, spawn_generators, write_csv


class TestSeeding:
    def test_streams_are_reproducible_and_distinct(self):
        a, b = seed_streams(3), seed_streams(3)
        assert set(a) == set(SEED_STREAMS)
        draws = {name: a[name].random() for name in SEED_STREAMS}
        assert draws == {name: b[name].random() for name in SEED_STREAMS}
        assert len(set(draws.values())) == len(SEED_STREAMS)

    def test_spawned_generators(self):
        first = [g.random() for g in spawn_generators(np.random.default_rng(1), 3)]
        second = [g.random() for g in spawn_generators(np.random.default_rng(1), 3)]
        assert first == second


class TestCsv:
    def test_append_keeps_single_header(self, tmp_path):
        path = str(tmp_path / "out" / "rows.csv")
        write_csv(path, ["a", "b"], [{"a": 1, "b": 0.1}])
        write_csv(path, ["a", "b"], [{"a": 2, "b": np.float64(0.2)}], append=True)
        rows = read_csv(path)
        assert rows == [{"a": "1", "b": "0.1"}, {"a": "2", "b": "0.2"}]


class TestConfigFile:
    def test_nested_sections_are_flattened(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"trainer": {"gamma": 0.9, "epochs": 4}, "seed": 2}))
        assert load_config_file(str(path)) == {"trainer.gamma": 0.9, "trainer.epochs": 4, "seed": 2}

    def test_empty_yaml(self, tmp_path):
        path = tmp_path / "empty.yaml"
        path.write_text("")
        assert load_config_file(str(path)) == {}

    def test_bad_files(self, tmp_path):
        with pytest.raises(ContractViolation):
            load_config_file(str(tmp_path / "missing.yaml"))
        path = tmp_path / "list.yaml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(ContractViolation):
            load_config_file(str(path))


class TestEvents:
    def test_events_are_json_lines(self, tmp_path):
        logger = setup_events_logger(str(tmp_path), 1_000_000)
        log_event("epoch", epoch=3, mean_reward=np.float64(1.5))
        for handler in logger.handlers:
            handler.flush()
        line = (tmp_path / "events.log").read_text().strip().splitlines()[-1]
        kind, payload = line.split(" | ")[-2:]
        assert kind == "epoch"
        assert json.loads(payload) == {"epoch": 3, "mean_reward": 1.5}

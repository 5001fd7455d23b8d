import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from spikerl.core.errors import BufferNotReady, ContractViolation
from spikerl.replay.buffer import (
    GUIDE,
    POLICY,
    SOURCE_CODES,
    EpisodeRecord,
    SequenceReplayBuffer,
    Transition,
    shift_history,
    slice_starts,
)
from spikerl.replay.episode_log import fill_buffer, load_episodes, save_episodes


def make_episode(length, guide_steps=0, terminal=False, obs_dim=3, act_dim=2, history_length=2, offset=0.0):
    """Chain of transitions whose observation at step t is ``offset + t`` everywhere."""
    obs = offset + np.arange(length + 1, dtype=float)[:, None] * np.ones(obs_dim)
    actions = np.arange(length, dtype=float)[:, None] * np.ones(act_dim) * 0.01
    history = np.zeros(history_length * act_dim)
    transitions = []
    for t in range(length):
        transitions.append(
            Transition(
                s=obs[t],
                a=actions[t],
                r=float(t),
                d=terminal and t == length - 1,
                s_next=obs[t + 1],
                source=GUIDE if t < guide_steps else POLICY,
                history=history.copy(),
            )
        )
        history = shift_history(history, actions[t])
    return transitions


class TestSliceStarts:
    def test_examples(self):
        assert len(slice_starts(100, 100, 10, 50)) == 1
        assert len(slice_starts(500, 100, 50, 50)) == 9
        assert slice_starts(40, 100, 10, 50) == []

    def test_short_episode_gets_one_padded_window(self):
        assert slice_starts(75, 100, 10, 50) == [(0, 75)]
        assert slice_starts(50, 100, 10, 50) == []

    def test_end_aligned_window(self):
        assert slice_starts(180, 100, 100, 50) == [(0, 100), (80, 100)]
        assert slice_starts(130, 100, 100, 50) == [(0, 100)]

    def test_windows_stay_inside_episode(self):
        for length in range(51, 700, 37):
            for start, valid in slice_starts(length, 100, 10, 50):
                assert 0 <= start and start + valid <= length

    @pytest.mark.parametrize("warm_up", [0, 50])
    def test_no_duplicate_windows(self, warm_up):
        for length in range(51, 700, 7):
            for stride in (1, 10, 50, 100):
                windows = slice_starts(length, 100, stride, warm_up)
                assert len(windows) == len(set(windows))

    def test_aligned_tail_without_warm_up(self):
        assert slice_starts(100, 100, 10, 0) == [(0, 100)]
        assert len(slice_starts(200, 100, 10, 0)) == 11


class TestBuffer:
    def test_windows_and_masks(self, rng):
        buf = SequenceReplayBuffer(capacity=10_000)
        assert buf.push_episode(make_episode(500)) == 41
        batch = buf.sample_batch(4, rng)
        assert batch.observations.shape == (100, 4, 3)
        assert batch.histories.shape == (100, 4, 4)
        assert_array_equal(batch.loss_mask[:, 0], [0.0] * 50 + [1.0] * 50)
        assert_array_equal(batch.valid_mask, 1.0)

    def test_windows_are_contiguous(self, rng):
        buf = SequenceReplayBuffer(capacity=10_000)
        buf.push_episode(make_episode(300))
        batch = buf.sample_batch(8, rng)
        assert_allclose(batch.next_observations[:-1], batch.observations[1:])
        assert_allclose(np.diff(batch.observations[:, :, 0], axis=0), 1.0)
        assert_allclose(batch.next_histories[:-1], batch.histories[1:])

    def test_padded_window(self, rng):
        buf = SequenceReplayBuffer(capacity=10_000)
        assert buf.push_episode(make_episode(70, terminal=True)) == 1
        batch = buf.sample_batch(2, rng)
        assert_array_equal(batch.valid_mask[:, 0], [1.0] * 70 + [0.0] * 30)
        assert_array_equal(batch.loss_mask[:, 0], [0.0] * 50 + [1.0] * 20 + [0.0] * 30)
        assert batch.dones[69, 0] == 1.0
        assert_allclose(batch.observations[70:], 0.0)

    def test_too_short_episode_adds_no_windows(self, rng):
        buf = SequenceReplayBuffer(capacity=10_000)
        assert buf.push_episode(make_episode(40)) == 0
        assert buf.num_transitions == 40
        with pytest.raises(BufferNotReady) as info:
            buf.sample(1, rng)
        assert (info.value.available, info.value.requested) == (0, 1)

    def test_not_ready(self, rng):
        buf = SequenceReplayBuffer(capacity=10_000)
        buf.push_episode(make_episode(100))
        with pytest.raises(BufferNotReady):
            buf.sample(2, rng)

    def test_fifo_eviction(self):
        buf = SequenceReplayBuffer(capacity=250)
        for i in range(3):
            buf.push_episode(make_episode(100, offset=1000.0 * i))
        assert buf.num_episodes == 2
        assert buf.num_transitions == 200
        assert len(buf) == 2
        firsts = sorted(e.observations[0, 0] for e in buf.all_episodes())
        assert firsts == [1000.0, 2000.0]
        assert {s.episode.observations[0, 0] for s in buf.slices} == {1000.0, 2000.0}

    def test_oversized_episode_is_dropped(self):
        buf = SequenceReplayBuffer(capacity=150)
        buf.push_episode(make_episode(100))
        assert buf.push_episode(make_episode(200)) == 0
        assert buf.num_transitions == 100

    def test_sources_are_kept(self, rng):
        buf = SequenceReplayBuffer(capacity=10_000)
        buf.push_episode(make_episode(100, guide_steps=60))
        batch = buf.sample_batch(1, rng)
        assert_array_equal(batch.sources[:60, 0], SOURCE_CODES[GUIDE])
        assert_array_equal(batch.sources[60:, 0], SOURCE_CODES[POLICY])

    def test_sample_transitions(self, rng):
        buf = SequenceReplayBuffer(capacity=10_000)
        buf.push_episode(make_episode(60, offset=0.0))
        buf.push_episode(make_episode(60, offset=500.0))
        batch = buf.sample_transitions(64, rng)
        assert batch.observations.shape == (64, 3)
        assert_allclose(batch.next_observations - batch.observations, 1.0)
        with pytest.raises(BufferNotReady):
            buf.sample_transitions(121, rng)

    def test_rejects_bad_episodes(self):
        buf = SequenceReplayBuffer()
        with pytest.raises(ContractViolation):
            buf.push_episode([])
        bad = make_episode(5)
        bad[2].d = True
        with pytest.raises(ContractViolation):
            buf.push_episode(bad)
        with pytest.raises(ContractViolation):
            SequenceReplayBuffer(sequence_length=50, warm_up=50)


class TestEpisodeLog:
    def test_save_and_reload(self, tmp_path, rng):
        episodes = [
            EpisodeRecord.from_transitions(make_episode(n, guide_steps=20)) for n in (80, 120, 60)
        ]
        path = str(tmp_path / "data" / "episodes.npz")
        save_episodes(path, episodes)
        loaded = load_episodes(path)
        assert [len(e) for e in loaded] == [80, 120, 60]
        assert_array_equal(loaded[1].sources, episodes[1].sources)
        buf = SequenceReplayBuffer(capacity=10_000)
        assert fill_buffer(buf, loaded) == 1 + 3 + 1

    def test_missing_file(self, tmp_path):
        with pytest.raises(ContractViolation):
            load_episodes(str(tmp_path / "nope.npz"))

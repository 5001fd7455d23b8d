from .buffer import (
    GUIDE,
    POLICY,
    SOURCE_CODES,
    EpisodeRecord,
    SequenceBatch,
    SequenceReplayBuffer,
    SequenceSlice,
    Transition,
    TransitionBatch,
    shift_history,
    slice_starts,
    stack_batch,
)
from .episode_log import fill_buffer, load_episodes, save_episodes

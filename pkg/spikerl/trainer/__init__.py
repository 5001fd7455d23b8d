from .config import JsrlConfig, Td3Config
from .guide import guide_criterion_met, make_guide, train_guide
from .history import ActionHistory, privileged_input
from .rollout import (
    EpisodeResult,
    EvalResult,
    collect_episodes,
    evaluate_policy,
    guide_rollout,
    jsrl_rollout,
    policy_rollout,
    run_episode,
)
from .stacking import StatelessPolicy, repeat_passes, stack_episode, stack_observations
from .td3 import (
    ActorLoss,
    TwinCritics,
    actor_loss_and_grads,
    actor_update,
    compute_td_targets,
    critic_update,
    critic_update_transitions,
    fit_critics,
    guide_actor_update,
)
from .training import METRICS_COLUMNS, SpikingTrainer, run_training

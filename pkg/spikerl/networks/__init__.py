from .lif import LifLayerState, lif_step, smooth_spike, surrogate_grad
from .params import Adam, ParamGrads, Sgd, init_dense, parameter_count, soft_update
from .snn import SMOOTH, SPIKING, GradientTape, SnnPolicy, snn_backward_sequence, snn_forward_sequence
from .mlp import MlpCache, MlpNetwork, mlp_backward, mlp_forward, mlp_forward_cached
from .checkpoint import load_checkpoint, network_from_dict, network_to_dict, save_checkpoint

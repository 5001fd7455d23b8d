from .energy import EnergyModel, energy_terms, estimate_energy, estimate_energy_pj
from .ops import (
    OpsReport,
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

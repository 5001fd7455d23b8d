from .schedule import (
    ADAPTIVE,
    FIXED,
    INTERVAL,
    SlopeSchedule,
    doubling_intervals,
    normalize_score,
    update_adaptive_slope,
)
from .diagnostics import (
    LayerGradStats,
    ProbeBatch,
    gradient_cosine_similarity,
    layer_gradient_magnitudes,
    make_input_batch,
    run_slope_sweep,
)

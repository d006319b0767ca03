"""
Network architecture, execution and persistence for AMOS-VPR
"""

from core.network.spec import (
    LayerKind,
    LayerSpec,
    NetworkSpec,
    amosnet_spec,
    amosnet_mini_spec,
    spec_by_name,
    infer_shapes,
    input_shapes,
    param_shapes,
    feature_layers,
)
from core.network.model import (
    LayerParams,
    ModelWeights,
    ActivationTrace,
    ActivationPattern,
    init_weights,
    forward,
    backward,
    run,
    loss_and_grads,
    predict,
)
from core.network.persistence import save_model, load_model, encode_model, decode_model

"""
Feature encoding for AMOS-VPR
"""

from core.encoding.pooling import (
    Descriptor,
    cell_bounds,
    l2_normalize,
    multiscale_pool,
    holistic_pool,
    raw_flatten,
    encode,
)
from core.encoding.store import (
    DescriptorSet,
    save_descriptors,
    load_descriptors,
    encode_descriptors,
    decode_descriptors,
)

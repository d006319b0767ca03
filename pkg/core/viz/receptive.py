"""
Receptive-field geometry for AMOS-VPR
"""

import math
from dataclasses import dataclass
from typing import Tuple

from core.errors import ShapeError
from core.network.spec import LayerKind, NetworkSpec


@dataclass(frozen=True)
class ReceptiveField:
    """Unit geometry in input pixels: window size, stride between units, center of unit (0, 0)"""
    size: int
    jump: int
    offset: float

    def box(self, row: int, col: int, height: int, width: int) -> Tuple[int, int, int, int]:
        """(top, left, bottom, right) pixel box of one unit, clipped; bottom/right exclusive"""
        top, left = self.origin(row, col)
        return (
            max(0, top),
            max(0, left),
            min(height, top + self.size),
            min(width, left + self.size),
        )

    def origin(self, row: int, col: int) -> Tuple[int, int]:
        """Unclipped top-left pixel of one unit"""
        top = math.floor(self.offset + row * self.jump - (self.size - 1) / 2 + 0.5)
        left = math.floor(self.offset + col * self.jump - (self.size - 1) / 2 + 0.5)
        return top, left


def receptive_field(spec: NetworkSpec, layer: str) -> ReceptiveField:
    """Compose size, jump and offset through every layer up to and including layer"""
    target = spec.index(layer)
    size, jump, offset = 1, 1, 0.0
    for current in spec.layers[:target + 1]:
        if current.kind in (LayerKind.FC, LayerKind.SOFTMAX):
            raise ShapeError(f"layer {layer} sees the whole input (after {current.name}); it has no receptive field")
        if current.kind is LayerKind.CONV:
            k, s, p = current.kernel_size, current.stride, current.pad
        elif current.kind is LayerKind.MAXPOOL:
            k, s, p = current.window, current.stride, 0
        else:
            continue
        offset += ((k - 1) / 2 - p) * jump
        size += (k - 1) * jump
        jump *= s
    return ReceptiveField(size, jump, offset)

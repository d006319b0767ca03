"""
Visual diagnostics for AMOS-VPR
"""

from core.viz.receptive import ReceptiveField, receptive_field
from core.viz.patches import PatchHit, top_k_patches, write_patches, tile_grid
from core.viz.heatmap import heatmap, overlay, normalize_minmax
from core.viz.mosaic import weight_mosaic, kernel_tile
from core.viz.svg import line_plot, bar_plot

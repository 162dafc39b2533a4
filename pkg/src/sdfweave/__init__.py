"""sdfweave: volumetric surface refinement and texture baking.

Refines a coarse triangle mesh into a detailed signed-distance field by
fusing multi-view sphere-traced normals and optimizing the grid against
them, then bakes a view-consistent volumetric color field by sequential
confidence-weighted projection. External image-to-image enhancement and
inpainting run behind a pluggable gateway with offline stand-ins.
"""

from .grid_core import (
    ColorGrid3,
    GridFormatError,
    GridHeader,
    Grid3,
    ScalarGrid3,
    VectorGrid3,
    gradient_central,
    gradient_grid,
    grid_to_world,
    read_grid,
    sample_trilinear,
    world_to_grid,
    write_grid,
)

__version__ = "0.1.0"

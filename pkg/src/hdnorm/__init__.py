"""Hierarchical depth normalization: affine-invariant depth losses over
multi-scale contexts, evaluation metrics, and a desk-scale fit harness."""

from .depth_core import DepthMap, read_csv_map, read_mask, read_pfm, write_mask, write_pfm
from .contexts import (
    ContextHierarchy,
    LevelSpec,
    Partition,
    batch_context,
    build_hierarchy,
    depth_percentile_bins,
    depth_range_bins,
    global_context,
    partition_dump,
    spatial_grid,
)
from .normalization import ContextStats, mad, median, normalize_context
from .loss import (
    LossConfig,
    LossReport,
    batch_ssi_loss,
    hdn_gradient,
    hdn_loss,
    l1_plus_hdn,
    local_only_loss,
    numerical_gradient,
    ssi_loss,
    tie_mask,
)
from .metrics import EvalReport, absrel, align_scale_shift, delta1, evaluate, scatter_sample
from .harness import (
    FitConfig,
    FitReport,
    SceneSpec,
    compare_losses,
    fit_depth,
    generate_scene,
    standard_fixture,
)

__all__ = [name for name in dir() if not name.startswith("_")]

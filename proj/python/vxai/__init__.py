"""Vessel graph, blob detection and attribution statistics for 3D segmentation explainability.

Volumes are numpy arrays indexed [z, y, x]; points and dims are given as (x, y, z).
"""

import json

from ._vxai import (
    ConfigError,
    DegenerateInput,
    DomainError,
    Error,
    InputError,
    __version__,
    attribution_file_name,
    detect_blobs,
    edt,
    fisher_cnr,
    generate_phantom,
    graph_json,
    l1_ratio,
    multiscale_frangi,
    otsu_threshold,
    patch_starts,
    patches_containing,
    prediction_file_name,
    read_volume,
    relative_connectivity,
    select_pois,
    skeletonize,
    spearman,
    write_volume,
)
from . import _vxai


def extract_graph(mask):
    """Skeletonize a binary mask and return its vessel graph as a dict."""
    return json.loads(graph_json(mask))


def validate_config(path):
    """Validated pipeline config with every default filled in."""
    return json.loads(_vxai.validate_config(str(path)))


def run_pipeline(config, out_dir=None, workers=0):
    """Run every stage, write the reports and return the run manifest."""
    return json.loads(_vxai.run_pipeline(str(config), None if out_dir is None else str(out_dir), workers))


__all__ = [name for name in dir() if not name.startswith("_") and name != "json"]

"""Entropy-based slice selection, VGG-style transfer learning and class activation maps."""

from ._core import (
    Error,
    InvalidArgument,
    Model,
    cam_from_features,
    class_factor,
    compute_cam,
    histogram,
    image_entropy,
    kfold_subject_split,
    mann_kendall,
    overlay,
    rank_slices,
    select_random_k,
    select_top_k,
    synth_volume,
)

__all__ = [
    "Error",
    "InvalidArgument",
    "Model",
    "cam_from_features",
    "class_factor",
    "compute_cam",
    "histogram",
    "image_entropy",
    "kfold_subject_split",
    "mann_kendall",
    "overlay",
    "rank_slices",
    "select_random_k",
    "select_top_k",
    "synth_volume",
]

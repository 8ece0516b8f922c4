"""Nucleus detection toolkit: segmentation, evaluation and a patch CNN."""

from _nucleo import (
    Model,
    dataset_summary,
    denoise,
    extract_patches,
    f_measure,
    load_frame,
    match_mask,
    match_points,
    segment,
    solidity,
    train_model,
)

__all__ = [
    "Model",
    "dataset_summary",
    "denoise",
    "extract_patches",
    "f_measure",
    "load_frame",
    "match_mask",
    "match_points",
    "segment",
    "solidity",
    "train_model",
]

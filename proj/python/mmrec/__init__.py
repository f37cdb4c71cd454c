"""Python bindings for the mmrec recommendation core."""

from ._core import (
    Dataset,
    MmrecError,
    ModelState,
    calculate_loss,
    evaluate,
    grid_size,
    init_params,
    k_core,
    load_checkpoint,
    load_dataset,
    map_at_k,
    ndcg_at_k,
    precision_at_k,
    preprocess,
    read_matrix,
    recall_at_k,
    run_grid,
    score_all,
    top_k,
    write_matrix,
)

__all__ = [
    "Dataset",
    "MmrecError",
    "ModelState",
    "calculate_loss",
    "evaluate",
    "grid_size",
    "init_params",
    "k_core",
    "load_checkpoint",
    "load_dataset",
    "map_at_k",
    "ndcg_at_k",
    "precision_at_k",
    "preprocess",
    "read_matrix",
    "recall_at_k",
    "run_grid",
    "score_all",
    "top_k",
    "write_matrix",
]

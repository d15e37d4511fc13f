"""mergeforge: checkpoint merging and weight-space diagnostics.

Library surface:

    container    read/write/validate the single-file tensor container
    taskvector   task vectors, task arithmetic, layer grouping, layer L2
    merge        LINEAR / TIES / DARE / DELLA merging and recipes
    diagnostics  Pearson correlation profiles and the mix-vs-merge verdict
    datamix      deterministic corpus subsampling and mixing
    metrics      BLEU-4, chrF++, ROUGE-L reference implementations
    sweep        ablation grids with percentage-delta reports
    cli          the `mergeforge` command
"""

__version__ = "0.1.0"

from mergeforge.container import read_checkpoint, validate_header, write_checkpoint
from mergeforge.tensormap import TensorMap
from mergeforge.taskvector import (
    TaskVector,
    apply_delta,
    compute_delta,
    group_layers,
    layer_l2,
)

__all__ = [
    "__version__",
    "TensorMap",
    "TaskVector",
    "read_checkpoint",
    "write_checkpoint",
    "validate_header",
    "compute_delta",
    "apply_delta",
    "group_layers",
    "layer_l2",
]

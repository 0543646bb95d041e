"""Discriminative multi-modal projection pairs from hashing semantics and class-block correlation."""
from .dataset import (DatasetError, MultiModalDataset, SplitSpec, from_arrays, load_dataset,
                      load_iris_two_class, split)
from .dccm import fit_dccm, objective_dccm
from .dnccm import fit_dnccm
from .encode_eval import (EvalReport, HashCodes, evaluate, export_projection_trace, fisher_ratio,
                          fuse, hash_codes, leave_one_out_accuracy, project)
from .linalg import GevError
from .model import ProjectionModel, load_model, save_model

__version__ = "0.1.0"

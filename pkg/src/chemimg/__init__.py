"""Molecular image encoding and desk-scale CNN training."""

from .molgraph import (
    Atom,
    Bond,
    Molecule,
    assign_implicit_hydrogens,
    molecular_formula,
    molecule_from_smiles,
    parse_smiles,
)
from .percept import annotate_atoms, gasteiger_charges
from .layout import center_and_rotate, generate_coords
from .raster import (
    ChannelSchema,
    make_noise_image,
    make_truth_image,
    rasterize,
    read_tensor_file,
    write_tensor_file,
)
from .dataset import (
    LabeledRecord,
    load_csv,
    make_split,
    oversample_minority,
)
from .metrics import classification_report, regression_report, rmse, roc_auc
from .experiment import (
    ExperimentConfig,
    run_controls,
    run_evaluation,
    run_training,
)

__version__ = "0.1.0"

__all__ = [
    "Atom",
    "Bond",
    "ChannelSchema",
    "ExperimentConfig",
    "LabeledRecord",
    "Molecule",
    "annotate_atoms",
    "assign_implicit_hydrogens",
    "center_and_rotate",
    "classification_report",
    "gasteiger_charges",
    "generate_coords",
    "load_csv",
    "make_noise_image",
    "make_split",
    "make_truth_image",
    "molecular_formula",
    "molecule_from_smiles",
    "oversample_minority",
    "parse_smiles",
    "rasterize",
    "read_tensor_file",
    "regression_report",
    "rmse",
    "roc_auc",
    "run_controls",
    "run_evaluation",
    "run_training",
    "write_tensor_file",
    "__version__",
]

"""Learning discrete latent structure models from tensor ranks of contingency tables."""

from .cpd import CpConfig, CpDecomposition, nncp
from .discovery import MeasurementModel, discover, find_measurement_model, pc_tensor_rank
from .estimator import LatentStructureLearner
from .graph import Dag, PartialDag, cpdag, d_separated, minimal_dsep_support
from .metrics import EvalReport, evaluate
from .rank_tests import cr_matrix_rank_test, tensor_rank_gof_test
from .simulate import LsmSpec, build_spec, oracle_joint, sample
from .tensor import CategoricalDataset, ContingencyTensor, estimate_contingency

__version__ = "0.1.0"

__all__ = [
    "CategoricalDataset",
    "ContingencyTensor",
    "CpConfig",
    "CpDecomposition",
    "Dag",
    "EvalReport",
    "LatentStructureLearner",
    "LsmSpec",
    "MeasurementModel",
    "PartialDag",
    "build_spec",
    "cpdag",
    "cr_matrix_rank_test",
    "d_separated",
    "discover",
    "estimate_contingency",
    "evaluate",
    "find_measurement_model",
    "minimal_dsep_support",
    "nncp",
    "oracle_joint",
    "pc_tensor_rank",
    "sample",
    "tensor_rank_gof_test",
]

"""Genuine multipartite correlations of qubit systems."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("multicorr")
except PackageNotFoundError:
    __version__ = "unknown"

from multicorr.pipeline_step import (
    Constraint_Exception,
    Domain_Exception,
    Impossible_Branch_Exception,
    Pipeline_Exception,
    Pipeline_Step,
    Size_Limit_Exception,
)

from multicorr.config import Config

from multicorr.pipeline_data import Pipeline_Data

from multicorr.output_manager import Output_Manager

from multicorr.pipeline import Pipeline

from multicorr.qstate import QuantumState, SparsePureState, make_named_state
from multicorr.cuts import (
    Bipartition,
    degree_of_correlations,
    factorize,
    has_genuine_correlations,
    is_product_across_cut,
)
from multicorr.covariance import covariance, pauli_covariance_scan, wmix_closed_form
from multicorr.distillation import closed_forms, distill, q_of_fidelity
from multicorr.postulates import (
    Scenario,
    check_measure_monotonicity,
    run_postulate_scenario,
)
from multicorr.work import (
    Communication_Constraint,
    Work_Protocol,
    delta_w_estimate,
    optimize_basis,
    run_protocol,
)

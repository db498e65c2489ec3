"""svmkit: a from-scratch SVM toolkit.

Dual QP training (hard and soft margin), kernelized decision functions,
one-against-one multiclass with calibrated probabilities, cross-validated
grid search, and a capacity/risk-bound lab, all behind a small library API
and the `svmkit` batch CLI.
"""

from .calibration import (
    ClassProbabilities,
    PairwiseProbMatrix,
    SigmoidParams,
    couple,
    cv_decision_values,
    fit_sigmoid,
    pairwise_prob,
    predict_proba,
    train_calibrated,
)
from .dataset import Dataset, FoldPlan, ParseError, Sample, format_sparse, parse_sparse, split_kfold
from .dual_solver import (
    ConvergenceError,
    DualProblem,
    DualSolution,
    HARD_MARGIN_C,
    SolverConfig,
    dual_objective,
    kkt_report,
    lagrangian,
    solve,
    solve_bruteforce,
)
from .kernels import GramMatrix, KernelSpec, eval_kernel, gaussian, gram, linear, parse_kernel_spec, rbf
from .model_selection import GridResult, ParamGrid, cv_accuracy, grid_csv, grid_search
from .risk import (
    MachineCandidate,
    RiskBoundQuery,
    RiskBoundReport,
    bound_curve,
    bound_curve_csv,
    empirical_risk,
    is_shattered,
    linearly_separable,
    risk_bound,
    srm_select,
    vc_confidence,
    vc_dimension_bruteforce,
)
from .svc import (
    BinaryModel,
    ModelFormatError,
    MulticlassModel,
    TrainParams,
    compute_bias,
    decision_value,
    load_model,
    predict,
    predict_multiclass,
    primal_from_dual,
    save_model,
    train_binary,
    train_multiclass,
)

__version__ = "0.1.0"

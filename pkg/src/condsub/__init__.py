"""Conditional-subgroup feature importance and effects toolkit."""

__version__ = "0.1.0"

from .data import Dataset, SplitSpec, load_csv, split, standardize, subsample
from .effects import EffectCurve, ale, boxplot_summary, cs_pdp, pdp
from .fidelity import KernelConfig, data_fidelity, data_fidelity_experiment, mmd, model_fidelity
from .importance import ImportanceResult, cs_pfi, depth_sweep, ground_truth_cpfi, pfi
from .models import (SQUARED_ERROR, MISCLASSIFICATION, LossFunction, PredictiveModel,
                     external_model, fit_cart, fit_forest, fit_knn, fit_ols)
from .samplers import (AleShift, CsPermutation, ImputeResidual, MarginalPermutation,
                       NoneSampler, Sampler, ale_shift)
from .simulation import ScenarioSpec, generate, run_table2, true_model
from .subgroups import SubgroupPartition, assign_groups, describe_groups, fit_partition
from .dependence import DependenceReport, dependence_report

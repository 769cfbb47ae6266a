"""Estimation of Levy-process characteristics (mean and jump-variance measure)
from equidistant low-frequency observations, by a weighted-C^2 minimum-distance
fit of the characteristic function seeded with a thresholded spectral pilot.
"""

from .charfn import (CharExponentModel, FrequencyGrid, SampleSet,
                     cf_process_norm, d2_distance, empirical_cf,
                     empirical_cf_triple, log_weight, model_cf,
                     psi_derivatives)
from .fit import (FitConfig, FitResult, functional_report, hf_baseline,
                  minimize, objective)
from .measure import (GridMeasure, GridShape, LossConfig, fourier_transform,
                      integrate, loss_ls)
from .pilot import PilotConfig, pilot_fnu, pilot_mean, project_pilot
from .sim import (MODEL_KINDS, ModelSpec, exact_cf_triple, sample_increments,
                  truth_model)

__version__ = "0.1.0"

__all__ = [
    "CharExponentModel", "FrequencyGrid", "SampleSet", "cf_process_norm",
    "d2_distance", "empirical_cf", "empirical_cf_triple", "log_weight",
    "model_cf", "psi_derivatives",
    "FitConfig", "FitResult", "functional_report", "hf_baseline", "minimize",
    "objective",
    "GridMeasure", "GridShape", "LossConfig", "fourier_transform", "integrate",
    "loss_ls",
    "PilotConfig", "pilot_fnu", "pilot_mean", "project_pilot",
    "MODEL_KINDS", "ModelSpec", "exact_cf_triple", "sample_increments",
    "truth_model",
    "__version__",
]

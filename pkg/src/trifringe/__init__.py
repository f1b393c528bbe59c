"""Characterization and simulation of a phase-tunable three-arm
photonic interferometer: coupling extraction from classical fringes,
photon-pair interference and visibilities, Fisher information of the
phase, and a deterministic synthetic-experiment generator."""

from .calibration import (FringeDataset, FringeRecord, PredictionBand, RatioSet,
                          SetpointFit, calibrate_device, compute_ratios,
                          fit_phase_calibration, fit_setpoint, likelihood,
                          model_ratios, predict_coincidences, solve_loss_products)
from .device import (CouplingMatrix, DeviceModel, IdealDevice, PhaseCalibration,
                     SetpointRecord, coupling_unitary, ideal_device_unitary,
                     ideal_tritter, model_interpolate, phase_from_power,
                     unitary_at)
from .errors import (DecompositionError, DegenerateLikelihoodError, Error,
                     FitError, FitFailureError, IllConditionedFitError,
                     InconsistentNormalizationError, RangeError,
                     SingularTermError, UndefinedVisibilityError,
                     ValidationError)
from .fisher import (FisherCurve, FringeFamily, fisher_curve, fisher_with_bands,
                     fringe_family)
from .homscan import (HomScanDataset, VisibilityRecord, fit_scan,
                      subtract_accidentals)
from .interference import (DelayProfile, FockState, classical_pair_probability,
                           multi_photon_distribution, multi_photon_probability,
                           pair_distribution, pair_probability,
                           pair_probability_delayed, predicted_visibility,
                           single_photon_distribution)
from .linalg import hermiticity_defect, herm_expm, permanent, unitarity_defect
from .synth import (CouplingLaw, RunConfig, ScanJob, SyntheticDeviceSpec,
                    generate_fringes, generate_hom_scans, sample_poisson,
                    true_model)

__version__ = "0.1.0"

__all__ = [
    "CouplingLaw", "CouplingMatrix", "DecompositionError",
    "DegenerateLikelihoodError", "DelayProfile", "DeviceModel", "Error",
    "FisherCurve",
    "FitError", "FitFailureError", "FockState", "FringeDataset",
    "FringeFamily", "FringeRecord", "HomScanDataset", "IdealDevice",
    "IllConditionedFitError", "InconsistentNormalizationError",
    "PhaseCalibration", "PredictionBand", "RangeError", "RatioSet", "RunConfig",
    "ScanJob", "SetpointFit", "SetpointRecord", "SingularTermError",
    "SyntheticDeviceSpec", "UndefinedVisibilityError", "ValidationError",
    "VisibilityRecord", "calibrate_device", "classical_pair_probability",
    "compute_ratios", "coupling_unitary", "fisher_curve", "fisher_with_bands",
    "fit_phase_calibration", "fit_scan", "fit_setpoint", "fringe_family",
    "generate_fringes", "generate_hom_scans", "herm_expm",
    "hermiticity_defect", "ideal_device_unitary", "ideal_tritter",
    "likelihood", "model_interpolate", "model_ratios",
    "multi_photon_distribution", "multi_photon_probability",
    "pair_distribution", "pair_probability", "pair_probability_delayed",
    "permanent", "phase_from_power", "predict_coincidences",
    "predicted_visibility", "sample_poisson", "single_photon_distribution",
    "solve_loss_products", "subtract_accidentals", "true_model",
    "unitarity_defect", "unitary_at",
]

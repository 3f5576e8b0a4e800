"""Camera attribution from sensor pattern noise, robust to radially
varying lens-distortion corrections."""

from .adaptive import (AnnulusTrace, SearchDefaults, SearchState,
                       optimize_alphas, snr_loss_ratio)
from .decision import (BaselineResult, CpceState, Verdict, attribute,
                       baseline_goljan12, cpce_update, default_threshold,
                       energy_floor, replay_cpce)
from .denoise import DenoiserConfig, denoise, residual
from .fingerprint import (Fingerprint, estimate_fingerprint, load_fingerprint,
                          save_fingerprint)
from .geometry import AnnulusPartition, RadialMap, map_radius, partition
from .pce import ExclusionSpec, pce
from .planes import Plane, load_image, ncc, to_grayscale
from .simulate import (DistortionProfile, SyntheticScene, apply_profile,
                       flat_field, gradient_field, synth_image, synth_prnu)

__version__ = "1.0.0"

__all__ = [
    "AnnulusPartition", "AnnulusTrace", "BaselineResult", "CpceState",
    "DenoiserConfig", "DistortionProfile", "ExclusionSpec", "Fingerprint",
    "Plane", "RadialMap", "SearchDefaults", "SearchState", "SyntheticScene",
    "Verdict", "apply_profile", "attribute", "baseline_goljan12",
    "cpce_update", "default_threshold", "denoise", "energy_floor",
    "estimate_fingerprint", "flat_field", "gradient_field", "load_fingerprint",
    "load_image", "map_radius", "ncc", "optimize_alphas", "partition", "pce",
    "replay_cpce", "residual", "save_fingerprint", "snr_loss_ratio",
    "synth_image", "synth_prnu", "to_grayscale",
]

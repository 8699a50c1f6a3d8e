"""insarlite: simulated InSAR data, classical and learned phase filters, metrics."""
from .baselines import BoxcarFilter, boxcar_filter, dilogarithm, ml_coherence, phase_std_from_coherence
from .estimator import DenseResidualFilter
from .metrics import coherence_rmse, evaluate_dataset, phase_rmse, ssim_mean
from .preprocessing import AmplitudeNormalizer, normalize_amplitude, observation_from_pair
from .raster import (
    Interferogram,
    Raster,
    SlcImage,
    form_interferogram,
    phase_to_complex,
    read_raster,
    reconstruct_phase,
    wrap_phase,
    write_raster,
)
from .simulator import SimConfig, generate_dataset, simulate_sample

__version__ = "0.1.0"

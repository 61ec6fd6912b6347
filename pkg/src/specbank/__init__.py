"""specbank: millimeter-wave waveguide filter-bank design, radiometer
noise budgeting, and chopped-radiometer flight-data reduction."""

__version__ = "0.1.0"

from .grid import FrequencyGrid
from .waveguide import (
    WaveguideSpec,
    standard_guide,
    te10_cutoff,
    propagation_constant,
    wave_impedance,
    guided_wavelength,
    section_smatrix,
)
from .network import (
    SMatrix,
    ConnectionGraph,
    ChainLink,
    validate,
    cascade_pair,
    cascade_chain,
    brute_force_solve,
    reduced_smatrix,
)
from .touchstone import read_touchstone, write_touchstone
from .filterbank import (
    ChannelDesign,
    BankLayout,
    PassbandMetrics,
    channel_twoport,
    channel_threeport,
    synthesize_channel,
    assemble_bank,
    optimize_spacings,
    passband_metrics,
)
from .radiometry import (
    RadiometerChain,
    CalibrationTable,
    NoiseBudget,
    noise_figure_to_temperature,
    radiometer_net,
    noise_budget,
    two_point_fit,
    net_from_samples,
)
from .pipeline import (
    Timestream,
    GlitchReport,
    Demodulated,
    Calibrated,
    load_timestream,
    deglitch,
    demodulate,
    calibrate,
    quality_report,
)
from .synth import Scenario, SceneProfile, GlitchTrain, generate, write_timestream

__all__ = [name for name in dir() if not name.startswith("_")]

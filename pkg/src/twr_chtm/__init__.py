"""Through-wall radar gait simulation, Doppler-time maps and Chebyshev-time map features."""

from .chtm import ChebyshevTimeMap, build_chtm
from .dsp import DopplerTimeMap, DspConfig, process_cube
from .echo import RadarConfig, ScattererSet, WallConfig, add_noise, simulate_cube
from .envelope import EnvelopeSet, SmoothingConfig, extract_envelopes
from .kinematics import Gait, GaitConfig

__version__ = "0.1.0"

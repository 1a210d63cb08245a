"""FDLP sub-band envelope dereverberation: envelope extraction, a CLSTM
envelope-gain predictor, synthetic reverberant pairs and ASR features."""
from .dsp import LpModel, Signal, all_pole_envelope, analytic_envelope, autocorr, dct_ii, idct_ii, levinson_durbin
from .fdlp import (EnvelopeMatrix, FdlpConfig, GainMatrix, apply_gain, fdlp_envelopes, gain_targets,
                   mel_band_windows, segment)
from .features import FeatureMatrix, integrate

__version__ = "0.1.0"

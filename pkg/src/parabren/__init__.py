"""Parabolic renormalization toolkit."""

import warnings

# numba probes an outdated TBB on some systems and falls back on its own
warnings.filterwarnings("ignore", message="The TBB threading layer requires")

__version__ = "0.1.0"

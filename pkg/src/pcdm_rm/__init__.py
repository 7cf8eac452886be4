"""Prefix-free code distribution matching (PCDM) and PAS rate matching.

Modules:

* :mod:`pcdm_rm.shaping` codes, alphabets and analytic metrics
* :mod:`pcdm_rm.codec` streaming and framed encoding
* :mod:`pcdm_rm.search` minimum-energy code construction
* :mod:`pcdm_rm.ldpc` lifted quasi-cyclic LDPC codes
* :mod:`pcdm_rm.pas` rate-matching planner and PAS chain
* :mod:`pcdm_rm.channel` AWGN, demapping and BLER simulation
"""

__version__ = "0.1.0"

from .codec import FramedCodeConfig, decode_framed, decode_stream, encode_framed, encode_stream
from .shaping import (
    AmplitudeAlphabet,
    CodeMetrics,
    PrefixCode,
    asymptotic_metrics,
    c2_code,
    energy_gap,
    mb_min_energy,
    stationary_distribution,
    validate_code,
)

__all__ = [
    "AmplitudeAlphabet", "CodeMetrics", "PrefixCode", "FramedCodeConfig",
    "validate_code", "asymptotic_metrics", "mb_min_energy", "energy_gap", "stationary_distribution",
    "c2_code", "encode_stream", "decode_stream", "encode_framed", "decode_framed",
]

"""Bounded-concurrent zero-knowledge protocol laboratory."""
from .bits import Bits
from .params import ProtocolParams, Profile, derive_params, desk_profile, check_claim_bounds

__all__ = ["Bits", "ProtocolParams", "Profile", "derive_params", "desk_profile", "check_claim_bounds"]
__version__ = "0.1.0"

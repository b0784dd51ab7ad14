"""Identity-based authenticated key exchange for GSM entities.

Layers, bottom up: ``algebra`` (fields and curves), ``pairing`` (reduced
Tate pairing with a distortion map), ``hashing`` (map-to-point and friends),
``ibc`` (identity-based keys, encryption, signatures), ``messages`` and
``protocol`` (the MS/VLR/HLR handshake plus the classic triplet baseline),
``harness`` (deterministic network with an adversary middlebox), ``cli``.
"""

from .algebra import CurveProfile, Point, demo_profile, get_profile, test_profile
from .harness import World, WorldConfig, default_config, run_honest_session
from .ibc import extract, ibe_decrypt, ibe_encrypt, ibs_sign, ibs_verify, setup
from .pairing import pairing
from .protocol import Hlr, MobileStation, SessionResult, SimCard, Vlr
from .rng import DetRng

__version__ = "0.1.0"

__all__ = [
    "CurveProfile",
    "DetRng",
    "Hlr",
    "MobileStation",
    "Point",
    "SessionResult",
    "SimCard",
    "Vlr",
    "World",
    "WorldConfig",
    "default_config",
    "demo_profile",
    "extract",
    "get_profile",
    "ibe_decrypt",
    "ibe_encrypt",
    "ibs_sign",
    "ibs_verify",
    "pairing",
    "run_honest_session",
    "setup",
    "test_profile",
]

"""Exception types shared across the package."""


class GsmIbcError(Exception):
    """Base class for every error raised by this package."""


class ProfileError(GsmIbcError):
    """Curve profile violates one of its structural invariants."""


class PointValidationError(GsmIbcError):
    """A supplied point is not on the curve or cannot be decoded."""


class NonResidueError(GsmIbcError):
    """Square root requested for a quadratic non-residue."""


class ZeroInversionError(GsmIbcError):
    """Multiplicative inverse of zero requested."""


class SubgroupError(GsmIbcError):
    """A point is on the curve but outside the prime-order subgroup."""


class PairingInternalError(GsmIbcError):
    """A line function evaluated to zero inside the Miller loop."""


class MapToPointError(GsmIbcError):
    """Map-to-point exceeded its iteration cap (broken profile)."""


class DegenerateKeyError(GsmIbcError):
    """Key material degenerated to the identity point."""


class WireFormatError(GsmIbcError):
    """A wire message or key encoding failed strict parsing."""


class ProtocolError(GsmIbcError):
    """Base for handshake failures; ``code`` names the terminating condition."""

    code = "protocol-error"


class UnknownSubscriberError(ProtocolError):
    code = "unknown-subscriber"


class UnknownImsiError(ProtocolError):
    code = "unknown-imsi"


class ReplayError(ProtocolError):
    code = "replay"


class MsAuthFailure(ProtocolError):
    code = "ms-auth-failure"


class VlrAuthFailure(ProtocolError):
    code = "vlr-auth-failure"


class NetworkAuthFailure(ProtocolError):
    code = "network-auth-failure"


class SignatureInvalidError(ProtocolError):
    code = "signature-invalid"


class SessionStateError(ProtocolError):
    code = "session-state"

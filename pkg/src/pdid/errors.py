"""Exception taxonomy for the whole package.

Authentication failures deliberately share one public code: callers at the
wire boundary must not learn whether a username was unknown or a password
wrong, so both map to the same opaque string.
"""

from __future__ import annotations

# Single opaque code surfaced for any credential failure.
AUTH_FAILED_CODE = "authentication-failed"


class PdidError(Exception):
    """Base class for every error raised by this package."""


class CryptoError(PdidError):
    """Base class for primitive-level failures."""


class InvalidScalar(CryptoError):
    """Scalar bytes out of range or malformed."""


class InvalidElement(CryptoError):
    """Group-membership check failed for an element or its encoding."""


class AuthFailure(CryptoError):
    """Symmetric authenticated decryption failed (bad key or corrupted box)."""


class DecryptFailure(CryptoError):
    """Public-key decryption failed (wrong recipient or corrupted ciphertext)."""


class MalformedRecord(PdidError):
    """Wire bytes do not parse as the expected record."""


class LedgerError(PdidError):
    """Base class for ledger failures."""


class DuplicateTransaction(LedgerError):
    """A transaction with the same id was already appended."""


class ContractError(PdidError):
    """Base class for contract-method rejections."""


class NotOnLedger(ContractError):
    """Inclusion proof did not verify against the ledger."""


class UsernameTaken(ContractError):
    """Registration for a username that already has metadata."""


class AuthRejected(ContractError):
    """Credential failure; public facing code is the same for all causes."""

    public_code = AUTH_FAILED_CODE


class UnknownUser(AuthRejected):
    """No metadata stored for this username (internal distinction only)."""


class WrongPassword(AuthRejected):
    """Password verification failed (internal distinction only)."""


class RateLimited(ContractError):
    """Too many recent authentication attempts for this username."""


class ConfirmFailed(PdidError):
    """Key-confirmation tag did not verify; session keys disagree."""


class StaleSession(PdidError):
    """A one-shot session step was driven twice."""

"""Exception types shared across the package.

Everything derives from ``IncheError`` so callers can catch the whole family;
the concrete classes also subclass ``ValueError`` because they all signal bad
inputs rather than internal faults.
"""


class IncheError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(IncheError, ValueError):
    """A scheme, context, or benchmark parameter violates its precondition."""


class PlaintextRangeError(IncheError, ValueError):
    """A plaintext lies outside the domain it was supposed to be drawn from."""


class SchemeMismatchError(IncheError, ValueError):
    """Two ciphertexts (or a ciphertext and a key) belong to different schemes."""


class CiphertextError(IncheError, ValueError):
    """A ciphertext value is not a member of the backend's ciphertext group."""


class DataError(IncheError, ValueError):
    """An input column could not be read or contains out-of-contract values."""


class CorrectnessError(IncheError):
    """A benchmark's decryption gate failed; no timings should be trusted."""

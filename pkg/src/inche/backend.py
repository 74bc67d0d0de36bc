"""Symmetric additively homomorphic encryption backends.

The incremental encoder (:mod:`inche.core`) never looks inside a ciphertext;
all it needs from a backend is the additive group structure: encrypt, decrypt,
ciphertext-plus-ciphertext, and ciphertext-times-plaintext-scalar. Two
backends implement that contract:

* ``paillier`` -- textbook Paillier with ``g = n + 1``, operated in secret-key
  mode: the same party holds the factorization and performs both encryption
  and decryption, which fits the outsourced-database setting where the data
  owner is sender and receiver at once. Homomorphic addition is ciphertext
  multiplication mod ``n^2``; scalar multiplication is exponentiation.
  Encryption and decryption run on the CRT components of ``n`` since the
  factors are available.
* ``debug`` -- an insecure oracle whose "ciphertexts" are the plaintexts
  themselves under modular arithmetic. It exists so tests can check the
  composed encryption path against exact integer arithmetic.

Keys generated with a ``seed`` are reproducible and therefore not
confidential; seeding exists for benchmark repeatability only. Unseeded keys
draw from the operating system's entropy source.
"""

from __future__ import annotations

import hashlib
import random
import struct
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import gmpy2

from .errors import (
    CiphertextError,
    ParameterError,
    PlaintextRangeError,
    SchemeMismatchError,
)

#: Extra bits required between the plaintext domain and the backend modulus,
#: so that sums over up to 2**24 rows of in-domain values never wrap.
HEADROOM_BITS = 24

_KEY_MAGIC = b"IHEK"
_KEY_VERSION = 1
_SCHEME_TAGS = {"paillier": 1, "debug": 2}
_TAG_SCHEMES = {v: k for k, v in _SCHEME_TAGS.items()}


@dataclass(frozen=True)
class SchemeParams:
    """Parameters a key is generated from.

    ``n_bits`` is the plaintext domain width: values handled by the
    incremental encoder live in ``[0, 2**n_bits)``. ``modulus_bits`` sizes the
    backend modulus; it must leave :data:`HEADROOM_BITS` of room above the
    plaintext domain so aggregates cannot wrap. ``seed`` makes key generation
    and encryption randomness deterministic.
    """

    n_bits: int
    modulus_bits: int = 2048
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.n_bits < 1:
            raise ParameterError(f"n_bits must be >= 1, got {self.n_bits}")
        if self.modulus_bits < self.n_bits + HEADROOM_BITS + 2:
            raise ParameterError(
                f"modulus_bits={self.modulus_bits} cannot hold the plaintext "
                f"space: need at least {self.n_bits + HEADROOM_BITS + 2} bits "
                f"for n_bits={self.n_bits} plus aggregation headroom"
            )


class CipherGroup(ABC):
    """Key-free portion of a scheme: the operations a server can run.

    Holds whatever public material ciphertext arithmetic needs (the Paillier
    modulus, the debug modulus) but none of the decryption material, mirroring
    the split between the data owner and the host that folds ciphertexts.
    """

    scheme_id: str
    plaintext_modulus: int

    @abstractmethod
    def add_values(self, x, y):
        """Combine two raw ciphertext values into the value encrypting the sum."""

    @abstractmethod
    def scale_value(self, x, k: int):
        """Raw ciphertext value encrypting ``k`` times the plaintext of ``x``."""

    @abstractmethod
    def contains(self, x) -> bool:
        """Whether ``x`` is a member of the ciphertext group."""


@dataclass(frozen=True)
class Ciphertext:
    """An opaque ciphertext value tagged with the scheme that produced it.

    ``value`` is an unsigned big integer in the backend's ciphertext space.
    Two ciphertexts may only be combined when their ``scheme_id`` matches;
    the id is derived from the key material, so ciphertexts from different
    keys never silently mix.
    """

    value: int
    scheme_id: str
    group: CipherGroup = field(repr=False, compare=False)


def he_add(a: Ciphertext, b: Ciphertext) -> Ciphertext:
    """Homomorphic addition: decrypts to the sum of the operands' plaintexts."""
    if a.scheme_id != b.scheme_id:
        raise SchemeMismatchError(
            f"cannot add ciphertexts from schemes {a.scheme_id!r} and {b.scheme_id!r}"
        )
    return Ciphertext(a.group.add_values(a.value, b.value), a.scheme_id, a.group)


def he_scalar_mul(a: Ciphertext, k: int) -> Ciphertext:
    """Ciphertext-by-scalar multiplication: decrypts to ``k`` times the plaintext.

    ``k`` must be a non-negative integer; ``k = 0`` yields an encryption of 0.
    """
    if k < 0:
        raise ParameterError(f"scalar must be non-negative, got {k}")
    return Ciphertext(a.group.scale_value(a.value, k), a.scheme_id, a.group)


class SecretKey(ABC):
    """A symmetric key: encrypts, decrypts, and knows its cipher group."""

    params: SchemeParams
    group: CipherGroup
    #: True when repeated encryptions of one plaintext differ (fresh randomness
    #: per call); the debug oracle is deterministic and reports False.
    probabilistic: bool

    @property
    def scheme_id(self) -> str:
        return self.group.scheme_id

    @property
    def plaintext_modulus(self) -> int:
        return self.group.plaintext_modulus

    @abstractmethod
    def encrypt(self, m: int) -> Ciphertext:
        """Encrypt ``m`` with fresh randomness. Requires ``0 <= m < modulus``."""

    @abstractmethod
    def decrypt(self, c: Ciphertext) -> int:
        """Recover the plaintext residue of ``c`` modulo the plaintext modulus."""

    def _check_plaintext(self, m: int) -> None:
        if not 0 <= m < self.plaintext_modulus:
            raise PlaintextRangeError(
                f"plaintext {m} outside [0, {self.plaintext_modulus})"
            )

    def _check_ciphertext(self, c: Ciphertext) -> None:
        if c.scheme_id != self.scheme_id:
            raise SchemeMismatchError(
                f"ciphertext from scheme {c.scheme_id!r} does not match key "
                f"scheme {self.scheme_id!r}"
            )
        if not self.group.contains(c.value):
            raise CiphertextError("ciphertext value outside the ciphertext group")


def _fingerprint(*values: int) -> str:
    h = hashlib.sha256()
    for v in values:
        h.update(int(v).to_bytes((int(v).bit_length() + 7) // 8 or 1, "big"))
        h.update(b"\x00")
    return h.hexdigest()[:12]


# ---------------------------------------------------------------------------
# Paillier in secret-key mode
# ---------------------------------------------------------------------------


class PaillierGroup(CipherGroup):
    """Ciphertext arithmetic mod ``n^2``; holds no decryption material."""

    def __init__(self, n: int):
        self.n = gmpy2.mpz(n)
        self.nsquare = self.n * self.n
        self.plaintext_modulus = int(n)
        self.scheme_id = f"paillier:{_fingerprint(n)}"

    def add_values(self, x, y):
        return (x * y) % self.nsquare

    def scale_value(self, x, k: int):
        return gmpy2.powmod(x, k, self.nsquare)

    def contains(self, x) -> bool:
        return 1 <= x < self.nsquare and gmpy2.gcd(x, self.n) == 1


class PaillierSecretKey(SecretKey):
    """Secret key holding the factorization ``n = p * q`` and CRT constants.

    Both halves of the usual public/private split stay with one party, so the
    key keeps the factors and uses them to run encryption and decryption on
    half-size moduli.
    """

    probabilistic = True

    def __init__(self, p: int, q: int, params: SchemeParams,
                 rng: random.Random | random.SystemRandom | None = None):
        p, q = gmpy2.mpz(p), gmpy2.mpz(q)
        self.params = params
        self.group = PaillierGroup(p * q)
        self._p, self._q = p, q
        self._psq, self._qsq = p * p, q * q
        n = self.group.n
        # g = n + 1, so g**m mod n^2 == 1 + m*n and never needs a powmod.
        self._hp = gmpy2.invert(self._l_func(gmpy2.powmod(n + 1, p - 1, self._psq), p), p)
        self._hq = gmpy2.invert(self._l_func(gmpy2.powmod(n + 1, q - 1, self._qsq), q), q)
        self._p_inv_q = gmpy2.invert(p, q)
        self._qsq_inv_psq = gmpy2.invert(self._qsq, self._psq)
        self._rng = rng if rng is not None else random.SystemRandom()
        # Seeded Mersenne state is not safe to share; SystemRandom is stateless.
        self._rng_lock = None if isinstance(self._rng, random.SystemRandom) else threading.Lock()

    @staticmethod
    def _l_func(u, m):
        return (u - 1) // m

    def _draw_obfuscator_base(self):
        n = int(self.group.n)
        while True:
            if self._rng_lock is not None:
                with self._rng_lock:
                    r = self._rng.randrange(1, n)
            else:
                r = self._rng.randrange(1, n)
            if gmpy2.gcd(r, n) == 1:
                return r

    def _powmod_n_crt(self, base):
        """``base ** n mod n^2`` via the two prime-square components."""
        n = self.group.n
        xp = gmpy2.powmod(base, n, self._psq)
        xq = gmpy2.powmod(base, n, self._qsq)
        h = ((xp - xq) * self._qsq_inv_psq) % self._psq
        return (xq + self._qsq * h) % self.group.nsquare

    def encrypt(self, m: int) -> Ciphertext:
        self._check_plaintext(m)
        n, nsq = self.group.n, self.group.nsquare
        nude = (1 + gmpy2.mpz(m) * n) % nsq
        obf = self._powmod_n_crt(self._draw_obfuscator_base())
        return Ciphertext((nude * obf) % nsq, self.scheme_id, self.group)

    def decrypt(self, c: Ciphertext) -> int:
        self._check_ciphertext(c)
        p, q = self._p, self._q
        mp = (self._l_func(gmpy2.powmod(c.value, p - 1, self._psq), p) * self._hp) % p
        mq = (self._l_func(gmpy2.powmod(c.value, q - 1, self._qsq), q) * self._hq) % q
        u = ((mq - mp) * self._p_inv_q) % q
        return int(mp + u * p)

    def __repr__(self) -> str:  # key material must never leak through repr
        return f"<PaillierSecretKey {self.scheme_id}>"


def _generate_prime(bits: int, rng) -> int:
    if bits < 2:
        raise ParameterError(f"cannot generate a {bits}-bit prime")
    while True:
        candidate = rng.getrandbits(bits) | (1 << (bits - 1)) | 1
        if gmpy2.is_prime(candidate):
            return candidate


# ---------------------------------------------------------------------------
# Debug oracle
# ---------------------------------------------------------------------------


class DebugGroup(CipherGroup):
    """Plaintext-carrying group: NOT encryption, a correctness oracle."""

    def __init__(self, modulus: int, n_bits: int):
        self.plaintext_modulus = modulus
        self.scheme_id = f"debug:{n_bits}b"

    def add_values(self, x, y):
        return (x + y) % self.plaintext_modulus

    def scale_value(self, x, k: int):
        return (x * k) % self.plaintext_modulus

    def contains(self, x) -> bool:
        return 0 <= x < self.plaintext_modulus


class DebugSecretKey(SecretKey):
    """Identity-scheme key: ciphertexts equal plaintexts mod the debug modulus.

    Deterministic by design so tests can compare composed ciphertexts against
    exact integer arithmetic. Never a security boundary.
    """

    probabilistic = False

    def __init__(self, params: SchemeParams):
        self.params = params
        self.group = DebugGroup(1 << (params.n_bits + HEADROOM_BITS + 8), params.n_bits)

    def encrypt(self, m: int) -> Ciphertext:
        self._check_plaintext(m)
        return Ciphertext(m % self.plaintext_modulus, self.scheme_id, self.group)

    def decrypt(self, c: Ciphertext) -> int:
        self._check_ciphertext(c)
        return int(c.value)

    def __repr__(self) -> str:
        return f"<DebugSecretKey {self.scheme_id}>"


# ---------------------------------------------------------------------------
# Key generation and serialization
# ---------------------------------------------------------------------------


def keygen(params: SchemeParams, scheme: str = "paillier") -> SecretKey:
    """Generate a secret key for ``scheme`` (``"paillier"`` or ``"debug"``).

    With ``params.seed`` set the result is fully deterministic, including the
    randomness later drawn by ``encrypt``; two calls with the same seed yield
    byte-identical key material.
    """
    if scheme == "debug":
        return DebugSecretKey(params)
    if scheme != "paillier":
        raise ParameterError(f"unknown scheme {scheme!r}")
    rng = random.Random(params.seed) if params.seed is not None else random.SystemRandom()
    half = params.modulus_bits // 2
    while True:
        p = _generate_prime(half, rng)
        q = _generate_prime(params.modulus_bits - half, rng)
        if p != q and (p * q).bit_length() == params.modulus_bits:
            break
    return PaillierSecretKey(p, q, params, rng=rng)


def _pack_int(v: int) -> bytes:
    raw = int(v).to_bytes((int(v).bit_length() + 7) // 8 or 1, "big")
    return struct.pack(">I", len(raw)) + raw


def _unpack_ints(data: bytes, offset: int, count: int) -> list[int]:
    out = []
    for _ in range(count):
        (length,) = struct.unpack_from(">I", data, offset)
        offset += 4
        out.append(int.from_bytes(data[offset:offset + length], "big"))
        offset += length
    if offset != len(data):
        raise ParameterError("trailing bytes in key blob")
    return out


def serialize_key(key: SecretKey) -> bytes:
    """Encode a key as a versioned binary blob for benchmark reuse.

    The blob contains the raw secret material unprotected; it is insecure at
    rest and must never be embedded in benchmark reports.
    """
    if isinstance(key, PaillierSecretKey):
        tag, ints = _SCHEME_TAGS["paillier"], [key._p, key._q]
    elif isinstance(key, DebugSecretKey):
        tag, ints = _SCHEME_TAGS["debug"], [key.plaintext_modulus]
    else:
        raise ParameterError(f"cannot serialize key of type {type(key).__name__}")
    head = _KEY_MAGIC + struct.pack(
        ">BBHI", _KEY_VERSION, tag, key.params.n_bits, key.params.modulus_bits
    )
    return head + b"".join(_pack_int(v) for v in ints)


def deserialize_key(blob: bytes) -> SecretKey:
    """Rebuild a key from :func:`serialize_key` output.

    The seed is not part of the blob, so a restored Paillier key draws fresh
    system randomness; its scheme id (and thus ciphertext compatibility) is
    unchanged because the id is derived from the modulus.
    """
    if blob[:4] != _KEY_MAGIC:
        raise ParameterError("not a key blob (bad magic)")
    version, tag, n_bits, modulus_bits = struct.unpack_from(">BBHI", blob, 4)
    if version != _KEY_VERSION:
        raise ParameterError(f"unsupported key blob version {version}")
    params = SchemeParams(n_bits=n_bits, modulus_bits=modulus_bits)
    scheme = _TAG_SCHEMES.get(tag)
    if scheme == "paillier":
        p, q = _unpack_ints(blob, 12, 2)
        return PaillierSecretKey(p, q, params)
    if scheme == "debug":
        return DebugSecretKey(params)
    raise ParameterError(f"unknown scheme tag {tag}")

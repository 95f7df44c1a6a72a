"""Primitive layer: group arithmetic, hashing, PRF, AEAD, PKE, signatures.

The protocol needs a prime-order group with fixed-width compressed element
encodings, a labeled hash usable both as a digest and as a map into the
group, a PRF, symmetric authenticated encryption, public-key encryption, and
detached signatures for ledger attestations.

The group is NIST P-256 implemented here directly (Jacobian coordinates,
windowed multiplication, batch-normalized fixed-base table) so that element
encodings stay at 33 bytes and the protocol layer can treat the group as an
opaque module boundary; swapping curves means editing only this file.
Symmetric and box primitives are delegated to the `cryptography` package:
ChaCha20-Poly1305 for AEAD, X25519 + ChaCha20-Poly1305 for public-key boxes,
Ed25519 for detached signatures.

All randomness flows through :func:`random_bytes`, which can be swapped for a
deterministic stream in tests via :func:`set_insecure_seed`.
"""

from __future__ import annotations

import hashlib
import hmac as _hmac
import secrets
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

from cryptography.exceptions import InvalidSignature, InvalidTag
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.asymmetric.x25519 import (
    X25519PrivateKey,
    X25519PublicKey,
)
from cryptography.hazmat.primitives.ciphers.aead import ChaCha20Poly1305
from cryptography.hazmat.primitives.serialization import (
    Encoding,
    PublicFormat,
)

from .errors import (
    AuthFailure,
    CryptoError,
    DecryptFailure,
    InvalidElement,
    InvalidScalar,
)

# ---------------------------------------------------------------------------
# Size constants (bytes). Every fixed width used on the wire lives here.
# ---------------------------------------------------------------------------

SCALAR_LEN = 32          # little-endian scalar in [0, GROUP_ORDER)
ELEMENT_LEN = 33         # compressed group element (parity byte + x)
DIGEST_LEN = 32          # SHA-256 output
KEY_LEN = 32             # symmetric key
BOX_PUBLIC_LEN = 32      # X25519 public key
BOX_SECRET_LEN = 32      # X25519 secret key
SIG_PUBLIC_LEN = 32      # Ed25519 public key
SIG_SECRET_LEN = 32      # Ed25519 secret seed
SIG_LEN = 64             # Ed25519 detached signature
AEAD_NONCE_LEN = 12
AEAD_TAG_LEN = 16
AEAD_OVERHEAD = AEAD_NONCE_LEN + AEAD_TAG_LEN
PKE_OVERHEAD = BOX_PUBLIC_LEN + AEAD_OVERHEAD

# ---------------------------------------------------------------------------
# Randomness. Seedable only for tests; the seeded stream is NOT secure.
# ---------------------------------------------------------------------------


class _InsecureStream:
    """Deterministic byte stream (SHA-256 in counter mode). Test use only."""

    def __init__(self, seed: int) -> None:
        self._state = hashlib.sha256(b"insecure-seed" + seed.to_bytes(8, "big")).digest()
        self._counter = 0
        self._buf = b""

    def read(self, n: int) -> bytes:
        while len(self._buf) < n:
            block = hashlib.sha256(
                self._state + self._counter.to_bytes(8, "big")
            ).digest()
            self._counter += 1
            self._buf += block
        out, self._buf = self._buf[:n], self._buf[n:]
        return out


_rng = secrets.token_bytes


def random_bytes(n: int) -> bytes:
    """Return n random bytes from the active source."""
    return _rng(n)


def set_insecure_seed(seed: int) -> None:
    """Replace the randomness source with a deterministic stream.

    Insecure by construction; exists so tests and the harness --seed flag can
    reproduce runs byte for byte. Never use outside tests.
    """
    global _rng
    _rng = _InsecureStream(seed).read


def use_system_randomness() -> None:
    """Restore the OS randomness source."""
    global _rng
    _rng = secrets.token_bytes


# ---------------------------------------------------------------------------
# P-256 field / curve internals.
# ---------------------------------------------------------------------------

_P = 0xFFFFFFFF00000001000000000000000000000000FFFFFFFFFFFFFFFFFFFFFFFF
GROUP_ORDER = 0xFFFFFFFF00000000FFFFFFFFFFFFFFFFBCE6FAADA7179E84F3B9CAC2FC632551
_A = _P - 3
_B = 0x5AC635D8AA3A93E7B3EBBD55769886BC651D06B0CC53B0F63BCE3C3E27D2604B
_GX = 0x6B17D1F2E12C4247F8BCE6E563A440F277037D812DEB33A0F4A13945D898C296
_GY = 0x4FE342E2FE1A7F9B8EE7EB4A7C0F9E162BCE33576B315ECECBB6406837BF51F5

# Jacobian point at infinity is represented as Z = 0.
_J_INF = (1, 1, 0)


def _jdbl(X1: int, Y1: int, Z1: int) -> tuple[int, int, int]:
    # dbl-2001-b for a = -3.
    p = _P
    if not Z1 or not Y1:
        return _J_INF
    delta = Z1 * Z1 % p
    gamma = Y1 * Y1 % p
    beta = X1 * gamma % p
    alpha = 3 * (X1 - delta) * (X1 + delta) % p
    X3 = (alpha * alpha - 8 * beta) % p
    Z3 = ((Y1 + Z1) * (Y1 + Z1) - gamma - delta) % p
    Y3 = (alpha * (4 * beta - X3) - 8 * gamma * gamma) % p
    return (X3, Y3, Z3)


def _jadd(X1: int, Y1: int, Z1: int, X2: int, Y2: int, Z2: int) -> tuple[int, int, int]:
    p = _P
    if not Z1:
        return (X2, Y2, Z2)
    if not Z2:
        return (X1, Y1, Z1)
    Z1Z1 = Z1 * Z1 % p
    Z2Z2 = Z2 * Z2 % p
    U1 = X1 * Z2Z2 % p
    U2 = X2 * Z1Z1 % p
    S1 = Y1 * Z2 * Z2Z2 % p
    S2 = Y2 * Z1 * Z1Z1 % p
    if U1 == U2:
        if S1 != S2:
            return _J_INF
        return _jdbl(X1, Y1, Z1)
    H = (U2 - U1) % p
    I = 4 * H * H % p
    J = H * I % p
    r = 2 * (S2 - S1) % p
    V = U1 * I % p
    X3 = (r * r - J - 2 * V) % p
    Y3 = (r * (V - X3) - 2 * S1 * J) % p
    Z3 = ((Z1 + Z2) * (Z1 + Z2) - Z1Z1 - Z2Z2) * H % p
    return (X3, Y3, Z3)


def _jadd_affine(X1: int, Y1: int, Z1: int, x2: int, y2: int) -> tuple[int, int, int]:
    # Mixed addition (second operand affine, Z2 = 1).
    p = _P
    if not Z1:
        return (x2, y2, 1)
    Z1Z1 = Z1 * Z1 % p
    U2 = x2 * Z1Z1 % p
    S2 = y2 * Z1 * Z1Z1 % p
    if U2 == X1:
        if S2 != Y1:
            return _J_INF
        return _jdbl(X1, Y1, Z1)
    H = (U2 - X1) % p
    HH = H * H % p
    I = 4 * HH % p
    J = H * I % p
    r = 2 * (S2 - Y1) % p
    V = X1 * I % p
    X3 = (r * r - J - 2 * V) % p
    Y3 = (r * (V - X3) - 2 * Y1 * J) % p
    Z3 = ((Z1 + H) * (Z1 + H) - Z1Z1 - HH) % p
    return (X3, Y3, Z3)


def _to_affine(X: int, Y: int, Z: int) -> tuple[Optional[int], Optional[int]]:
    if not Z:
        return (None, None)
    p = _P
    zi = pow(Z, p - 2, p)
    zi2 = zi * zi % p
    return (X * zi2 % p, Y * zi2 % p * zi % p)


def _window_mult(k: int, x: int, y: int) -> tuple[Optional[int], Optional[int]]:
    # 4-bit fixed window over Jacobian coordinates.
    if k == 0:
        return (None, None)
    tbl = [None] * 16
    tbl[1] = (x, y, 1)
    tbl[2] = _jdbl(x, y, 1)
    for i in range(3, 16):
        tbl[i] = _jadd(*tbl[i - 1], x, y, 1)
    X, Y, Z = _J_INF
    started = False
    for shift in range(252, -4, -4):
        if started:
            X, Y, Z = _jdbl(X, Y, Z)
            X, Y, Z = _jdbl(X, Y, Z)
            X, Y, Z = _jdbl(X, Y, Z)
            X, Y, Z = _jdbl(X, Y, Z)
        d = (k >> shift) & 15 if shift >= 0 else 0
        if d:
            X, Y, Z = _jadd(X, Y, Z, *tbl[d])
            started = True
    return _to_affine(X, Y, Z)


_BASE_TABLE: Optional[list[list[tuple[int, int]]]] = None


def _base_table() -> list[list[tuple[int, int]]]:
    # Fixed-base comb: table[i][d-1] = (d * 16^i) * G in affine coordinates,
    # batch-normalized with a single field inversion.
    global _BASE_TABLE
    if _BASE_TABLE is not None:
        return _BASE_TABLE
    p = _P
    rows_j: list[list[tuple[int, int, int]]] = []
    bx, by, bz = _GX, _GY, 1
    for _ in range(64):
        row = [(bx, by, bz)]
        px, py, pz = bx, by, bz
        for _ in range(14):
            px, py, pz = _jadd(px, py, pz, bx, by, bz)
            row.append((px, py, pz))
        rows_j.append(row)
        for _ in range(4):
            bx, by, bz = _jdbl(bx, by, bz)
    flat = [pt for row in rows_j for pt in row]
    prefix = [1]
    acc = 1
    for _, _, z in flat:
        acc = acc * z % p
        prefix.append(acc)
    inv = pow(acc, p - 2, p)
    affine: list[Optional[tuple[int, int]]] = [None] * len(flat)
    for idx in range(len(flat) - 1, -1, -1):
        X, Y, Z = flat[idx]
        zi = prefix[idx] * inv % p
        inv = inv * Z % p
        zi2 = zi * zi % p
        affine[idx] = (X * zi2 % p, Y * zi2 % p * zi % p)
    _BASE_TABLE = [
        [affine[i * 15 + d] for d in range(15)] for i in range(64)
    ]
    return _BASE_TABLE


def _base_mult(k: int) -> tuple[Optional[int], Optional[int]]:
    if k == 0:
        return (None, None)
    tbl = _base_table()
    X, Y, Z = _J_INF
    i = 0
    while k:
        d = k & 15
        if d:
            ax, ay = tbl[i][d - 1]
            X, Y, Z = _jadd_affine(X, Y, Z, ax, ay)
        k >>= 4
        i += 1
    return _to_affine(X, Y, Z)


# ---------------------------------------------------------------------------
# Public scalar / element types.
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Scalar:
    """Residue mod the group order; encodes to 32 little-endian bytes."""

    value: int

    def __post_init__(self) -> None:
        if not isinstance(self.value, int) or not 0 <= self.value < GROUP_ORDER:
            raise InvalidScalar("scalar out of range")

    def encode(self) -> bytes:
        return self.value.to_bytes(SCALAR_LEN, "little")


@dataclass(frozen=True, slots=True)
class GroupElement:
    """Point on the curve; (None, None) is the group identity.

    Construction validates the curve equation, so any held instance passed a
    membership check. The identity has a reserved all-zero encoding that the
    wire decoder refuses; it can only arise from in-process arithmetic.
    """

    x: Optional[int]
    y: Optional[int]

    def __post_init__(self) -> None:
        x, y = self.x, self.y
        if x is None and y is None:
            return
        if (
            not isinstance(x, int)
            or not isinstance(y, int)
            or not 0 <= x < _P
            or not 0 <= y < _P
            or (y * y - (x * x * x + _A * x + _B)) % _P != 0
        ):
            raise InvalidElement("point not on curve")

    @property
    def is_identity(self) -> bool:
        return self.x is None

    def encode(self) -> bytes:
        if self.x is None:
            return b"\x00" * ELEMENT_LEN
        return bytes([2 | (self.y & 1)]) + self.x.to_bytes(32, "big")


IDENTITY = GroupElement(None, None)
GENERATOR = GroupElement(_GX, _GY)


def decode_element(data: bytes) -> GroupElement:
    """Decode a compressed element, enforcing membership; identity refused."""
    if len(data) != ELEMENT_LEN:
        raise InvalidElement("element encoding must be 33 bytes")
    prefix = data[0]
    if prefix not in (2, 3):
        raise InvalidElement("bad compression prefix")
    x = int.from_bytes(data[1:], "big")
    if x >= _P:
        raise InvalidElement("x out of field range")
    rhs = (x * x * x + _A * x + _B) % _P
    y = pow(rhs, (_P + 1) // 4, _P)
    if y * y % _P != rhs:
        raise InvalidElement("x has no point on the curve")
    if y & 1 != prefix & 1:
        y = _P - y
    return GroupElement(x, y)


def decode_scalar(data: bytes) -> Scalar:
    if len(data) != SCALAR_LEN:
        raise InvalidScalar("scalar encoding must be 32 bytes")
    v = int.from_bytes(data, "little")
    if v >= GROUP_ORDER:
        raise InvalidScalar("scalar not reduced")
    return Scalar(v)


def random_scalar() -> Scalar:
    """Uniform nonzero scalar in [1, order), by rejection sampling."""
    while True:
        v = int.from_bytes(random_bytes(SCALAR_LEN), "little")
        if 1 <= v < GROUP_ORDER:
            return Scalar(v)


def base_exp(e: Scalar) -> GroupElement:
    """Generator raised to e."""
    x, y = _base_mult(e.value)
    return GroupElement(x, y)


def exp(b: GroupElement, e: Scalar) -> GroupElement:
    """b raised to e; identity base or zero exponent give the identity."""
    if b.x is None or e.value == 0:
        return IDENTITY
    x, y = _window_mult(e.value, b.x, b.y)
    return GroupElement(x, y)


def mul(a: GroupElement, b: GroupElement) -> GroupElement:
    """Group operation (point addition)."""
    if a.x is None:
        return b
    if b.x is None:
        return a
    X, Y, Z = _jadd(a.x, a.y, 1, b.x, b.y, 1)
    x, y = _to_affine(X, Y, Z)
    return GroupElement(x, y)


def scalar_add(a: Scalar, b: Scalar) -> Scalar:
    return Scalar((a.value + b.value) % GROUP_ORDER)


def scalar_mul(a: Scalar, b: Scalar) -> Scalar:
    return Scalar(a.value * b.value % GROUP_ORDER)


def scalar_invert(s: Scalar) -> Scalar:
    """Multiplicative inverse mod the group order; zero is refused."""
    if s.value == 0:
        raise InvalidScalar("zero has no inverse")
    return Scalar(pow(s.value, GROUP_ORDER - 2, GROUP_ORDER))


def scalar_from_digest(d: bytes) -> Scalar:
    """Reduce a digest to a scalar (used for exponent-combining hashes)."""
    if len(d) != DIGEST_LEN:
        raise InvalidScalar("digest must be 32 bytes")
    return Scalar(int.from_bytes(d, "little") % GROUP_ORDER)


# ---------------------------------------------------------------------------
# Labeled hashing, hash-to-group, PRF.
# ---------------------------------------------------------------------------

Label = Union[str, bytes]


def _frame(label: Label, parts: Iterable[bytes]) -> bytes:
    # Collision-resistant framing: every component is u64 length-prefixed,
    # so part boundaries can never be shifted.
    if isinstance(label, str):
        label = label.encode()
    out = [len(label).to_bytes(8, "big"), label]
    for part in parts:
        out.append(len(part).to_bytes(8, "big"))
        out.append(part)
    return b"".join(out)


def hash_parts(label: Label, parts: Sequence[bytes]) -> bytes:
    """Domain-separated hash of a sequence of byte strings (32-byte digest)."""
    return hashlib.sha256(_frame(label, parts)).digest()


def _sswu(u: int) -> tuple[int, int]:
    # Simplified SWU map for P-256 (Z = -10), p = 3 mod 4 square roots.
    p = _P
    A, B = _A, _B
    Z = p - 10
    zu2 = Z * u * u % p
    tv = (zu2 * zu2 + zu2) % p
    if tv == 0:
        x1 = B * pow(Z * A % p, p - 2, p) % p
    else:
        x1 = B * pow(A, p - 2, p) % p * (p - 1 - pow(tv, p - 2, p)) % p
    gx1 = (x1 * x1 % p * x1 + A * x1 + B) % p
    y1 = pow(gx1, (p + 1) // 4, p)
    if y1 * y1 % p == gx1:
        x, y = x1, y1
    else:
        x2 = zu2 * x1 % p
        gx2 = (x2 * x2 % p * x2 + A * x2 + B) % p
        y2 = pow(gx2, (p + 1) // 4, p)
        x, y = x2, y2
    if (u & 1) != (y & 1):
        y = p - y
    return (x, y)


def hash_to_group(label: Label, parts: Sequence[bytes]) -> GroupElement:
    """Map labeled input to a group element (uniform two-point SWU map)."""
    framed = _frame(label, parts)
    us = []
    for i in (1, 2):
        raw = hashlib.sha512(b"hash-to-group" + bytes([i]) + framed).digest()
        us.append(int.from_bytes(raw[:48], "big") % _P)
    x1, y1 = _sswu(us[0])
    x2, y2 = _sswu(us[1])
    X, Y, Z = _jadd(x1, y1, 1, x2, y2, 1)
    x, y = _to_affine(X, Y, Z)
    return GroupElement(x, y)


def prf(key: bytes, msg: bytes) -> bytes:
    """HMAC-SHA256 under a 32-byte key."""
    if len(key) != KEY_LEN:
        raise CryptoError("prf key must be 32 bytes")
    return _hmac.new(key, msg, hashlib.sha256).digest()


# ---------------------------------------------------------------------------
# AEAD (ChaCha20-Poly1305). Ciphertext layout: nonce || body+tag.
# ---------------------------------------------------------------------------


def aead_encrypt(key: bytes, plaintext: bytes) -> bytes:
    if len(key) != KEY_LEN:
        raise CryptoError("aead key must be 32 bytes")
    nonce = random_bytes(AEAD_NONCE_LEN)
    return nonce + ChaCha20Poly1305(key).encrypt(nonce, plaintext, None)


def aead_decrypt(key: bytes, ciphertext: bytes) -> bytes:
    if len(key) != KEY_LEN:
        raise CryptoError("aead key must be 32 bytes")
    if len(ciphertext) < AEAD_OVERHEAD:
        raise AuthFailure("ciphertext too short")
    nonce, body = ciphertext[:AEAD_NONCE_LEN], ciphertext[AEAD_NONCE_LEN:]
    try:
        return ChaCha20Poly1305(key).decrypt(nonce, body, None)
    except InvalidTag as exc:
        raise AuthFailure("authenticated decryption failed") from exc


# ---------------------------------------------------------------------------
# Public-key boxes (X25519 + ChaCha20-Poly1305).
# Ciphertext layout: ephemeral public || nonce || body+tag.
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class KeyPair:
    """Raw byte keypair; the public half is always derivable from the secret."""

    secret: bytes
    public: bytes


def pk_gen() -> KeyPair:
    """Fresh box keypair."""
    secret = random_bytes(BOX_SECRET_LEN)
    public = (
        X25519PrivateKey.from_private_bytes(secret)
        .public_key()
        .public_bytes(Encoding.Raw, PublicFormat.Raw)
    )
    return KeyPair(secret, public)


def _box_key(eph_public: bytes, recipient_public: bytes, shared: bytes) -> bytes:
    return hash_parts("pke-kdf", [eph_public, recipient_public, shared])


def pk_encrypt(public: bytes, plaintext: bytes, entropy: Optional[bytes] = None) -> bytes:
    """Encrypt to a box public key.

    `entropy`, when given, derandomizes the ephemeral key and nonce; callers
    must guarantee it is unique per (recipient, plaintext) use. This exists so
    a deterministic contract can reply with ciphertexts without consuming
    randomness.
    """
    if len(public) != BOX_PUBLIC_LEN:
        raise CryptoError("box public key must be 32 bytes")
    if entropy is None:
        eph_secret = random_bytes(BOX_SECRET_LEN)
        nonce = random_bytes(AEAD_NONCE_LEN)
    else:
        eph_secret = hash_parts("pke-eph", [entropy])
        nonce = hash_parts("pke-nonce", [entropy])[:AEAD_NONCE_LEN]
    eph = X25519PrivateKey.from_private_bytes(eph_secret)
    eph_public = eph.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)
    shared = eph.exchange(X25519PublicKey.from_public_bytes(public))
    key = _box_key(eph_public, public, shared)
    body = ChaCha20Poly1305(key).encrypt(nonce, plaintext, None)
    return eph_public + nonce + body


def pk_decrypt(secret: bytes, ciphertext: bytes) -> bytes:
    if len(secret) != BOX_SECRET_LEN:
        raise CryptoError("box secret key must be 32 bytes")
    if len(ciphertext) < PKE_OVERHEAD:
        raise DecryptFailure("ciphertext too short")
    eph_public = ciphertext[:BOX_PUBLIC_LEN]
    nonce = ciphertext[BOX_PUBLIC_LEN : BOX_PUBLIC_LEN + AEAD_NONCE_LEN]
    body = ciphertext[BOX_PUBLIC_LEN + AEAD_NONCE_LEN :]
    sk = X25519PrivateKey.from_private_bytes(secret)
    public = sk.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)
    try:
        shared = sk.exchange(X25519PublicKey.from_public_bytes(eph_public))
        key = _box_key(eph_public, public, shared)
        return ChaCha20Poly1305(key).decrypt(nonce, body, None)
    except (InvalidTag, ValueError) as exc:
        raise DecryptFailure("box decryption failed") from exc


# ---------------------------------------------------------------------------
# Detached signatures (Ed25519) for ledger node attestations.
# ---------------------------------------------------------------------------


def sig_gen() -> KeyPair:
    """Fresh signing keypair (secret is the 32-byte seed)."""
    secret = random_bytes(SIG_SECRET_LEN)
    public = (
        Ed25519PrivateKey.from_private_bytes(secret)
        .public_key()
        .public_bytes(Encoding.Raw, PublicFormat.Raw)
    )
    return KeyPair(secret, public)


def sig_public(secret: bytes) -> bytes:
    """Public half for a signing seed."""
    return (
        Ed25519PrivateKey.from_private_bytes(secret)
        .public_key()
        .public_bytes(Encoding.Raw, PublicFormat.Raw)
    )


def sign(secret: bytes, message: bytes) -> bytes:
    return Ed25519PrivateKey.from_private_bytes(secret).sign(message)


def verify(public: bytes, message: bytes, signature: bytes) -> bool:
    try:
        Ed25519PublicKey.from_public_bytes(public).verify(signature, message)
        return True
    except (InvalidSignature, ValueError):
        return False

"""Protocol roles: the user-side and server-side halves of registration,
authentication, and password update.

The server is deliberately blind: its session never touches the password,
the OPRF key, or any static secret. Everything password-derived stays on the
user side or inside the contract, and the server's one-shot reply secret is
dropped as soon as the contract's reply is opened.

Key schedule (both endpoints): shared = (peer_eph * peer_static^e)^(own_eph +
e'*own_static), session_key = PRF(H(shared), 0x00). Key confirmation is a
PRF tag over a role label plus the flow transcript, so the two directions
can never be confused and any tampering with a flow shows up as a tag
mismatch rather than a silently wrong key.
"""

from __future__ import annotations

import hmac as _hmac
from dataclasses import dataclass
from typing import Optional, Tuple, Union

from . import crypto, oprf
from .errors import AuthFailure, StaleSession, WrongPassword
from .ledger import Transaction
from .wire import (
    GpmAuthRequest,
    GpmAuthResponse,
    PasswordMetadata,
    RegistrationPlaintext,
    ServerToUser,
    TxKind,
    UpdatePlaintext,
    UserAuthInit,
    decode_envelope_plaintext,
    decode_expected,
    encode_envelope_plaintext,
)

_CONFIRM_LABELS = {"client": b"confirm-client", "server": b"confirm-server"}


def _as_bytes(value: Union[str, bytes]) -> bytes:
    return value.encode("utf-8") if isinstance(value, str) else value


# ---------------------------------------------------------------------------
# Registration and update (user side only; the server is not involved).
# ---------------------------------------------------------------------------


def build_metadata(password: Union[str, bytes]) -> PasswordMetadata:
    """Create fresh password metadata: OPRF key, both static keypairs, and
    the envelope sealing the user's static secret under the OPRF output."""
    password = _as_bytes(password)
    oprf_key = crypto.random_scalar()
    envelope_key = oprf.oprf_eval(oprf_key, password)
    server_static_priv = crypto.random_scalar()
    server_static_pub = crypto.base_exp(server_static_priv)
    client_static_priv = crypto.random_scalar()
    client_static_pub = crypto.base_exp(client_static_priv)
    envelope = crypto.aead_encrypt(
        envelope_key,
        encode_envelope_plaintext(client_static_priv, client_static_pub, server_static_pub),
    )
    return PasswordMetadata(
        oprf_key=oprf_key,
        server_static_priv=server_static_priv,
        server_static_pub=server_static_pub,
        client_static_pub=client_static_pub,
        envelope=envelope,
    )


def client_register(
    username: Union[str, bytes],
    password: Union[str, bytes],
    gpm_public: bytes,
) -> Transaction:
    """Build the registration transaction (metadata encrypted to the contract)."""
    plaintext = RegistrationPlaintext(_as_bytes(username), build_metadata(password))
    return Transaction(TxKind.REGISTER, crypto.pk_encrypt(gpm_public, plaintext.encode()))


def client_update(
    username: Union[str, bytes],
    old_password: Union[str, bytes],
    new_password: Union[str, bytes],
    gpm_public: bytes,
) -> Transaction:
    """Build the password-update transaction: old password as proof, new
    metadata as replacement."""
    plaintext = UpdatePlaintext(
        _as_bytes(username), _as_bytes(old_password), build_metadata(new_password)
    )
    return Transaction(TxKind.UPDATE, crypto.pk_encrypt(gpm_public, plaintext.encode()))


# ---------------------------------------------------------------------------
# Authentication: user side.
# ---------------------------------------------------------------------------


@dataclass
class ClientSession:
    """Ephemeral client state between the two authentication flows."""

    username: bytes
    blind: crypto.Scalar
    eph_priv: crypto.Scalar
    eph_pub: crypto.GroupElement
    finished: bool = False

    def ephemeral_state_bytes(self) -> bytes:
        """Serialized ephemeral state: blind || eph_priv || eph_pub (97 B)."""
        if self.finished:
            raise StaleSession("session already finished")
        return self.blind.encode() + self.eph_priv.encode() + self.eph_pub.encode()


def client_auth_init(
    username: Union[str, bytes], password: Union[str, bytes]
) -> Tuple[ClientSession, UserAuthInit]:
    """Start a login: blind the password, pick an ephemeral share."""
    username = _as_bytes(username)
    blinding = oprf.blind(_as_bytes(password))
    eph_priv = crypto.random_scalar()
    eph_pub = crypto.base_exp(eph_priv)
    session = ClientSession(username, blinding.r, eph_priv, eph_pub)
    return session, UserAuthInit(username, blinding.alpha, eph_pub)


def client_auth_finish(
    session: ClientSession,
    password: Union[str, bytes],
    server_id: Union[str, bytes],
    msg: ServerToUser,
) -> bytes:
    """Finish a login: unblind the OPRF output, open the envelope, derive the
    session key.

    A wrong password shows up here as the envelope failing to open. On
    success the password-derived envelope key, the recovered static secret,
    and the session's ephemeral scalars are dropped from reachable state.
    """
    if session.finished:
        raise StaleSession("session already finished")
    password = _as_bytes(password)
    server_id = _as_bytes(server_id)
    envelope_key = oprf.unblind(msg.evaluated_element, session.blind, password)
    try:
        envelope_pt = crypto.aead_decrypt(envelope_key, msg.envelope)
    except AuthFailure:
        raise WrongPassword("envelope did not open under this password") from None
    static_priv, static_pub, server_static_pub = decode_envelope_plaintext(envelope_pt)
    del envelope_key, envelope_pt, static_pub

    e_client = crypto.hash_parts(
        "hmqv-eu", [msg.server_eph_pub.encode(), session.username]
    )
    e_server = crypto.hash_parts("hmqv-es", [session.eph_pub.encode(), server_id])
    combined_base = crypto.mul(
        msg.server_eph_pub,
        crypto.exp(server_static_pub, crypto.scalar_from_digest(e_server)),
    )
    exponent = crypto.scalar_add(
        session.eph_priv,
        crypto.scalar_mul(crypto.scalar_from_digest(e_client), static_priv),
    )
    shared = crypto.exp(combined_base, exponent)
    raw_key = crypto.hash_parts("hmqv-key", [shared.encode()])
    session_key = crypto.prf(raw_key, b"\x00")

    del static_priv, exponent, shared, raw_key
    session.finished = True
    session.blind = session.eph_priv = None  # type: ignore[assignment]
    return session_key


# ---------------------------------------------------------------------------
# Authentication: server side.
# ---------------------------------------------------------------------------


@dataclass
class ServerSession:
    """Server state between its two phases.

    Holds only blinded or public values plus the one-shot reply keypair;
    nothing here depends on the user's password.
    """

    server_id: bytes
    username: bytes
    blinded_element: crypto.GroupElement
    client_eph_pub: crypto.GroupElement
    eph_priv: crypto.Scalar
    eph_pub: crypto.GroupElement
    e_client: bytes
    e_server: bytes
    reply_keypair: Optional[crypto.KeyPair]
    session_key: Optional[bytes] = None


def server_auth_phase1(
    server_id: Union[str, bytes], msg: UserAuthInit, gpm_public: bytes
) -> Tuple[ServerSession, Transaction]:
    """Wrap the user's flow into an auth transaction for the contract.

    The server contributes its ephemeral share, both exponent-combining
    hashes, and a fresh reply key the contract will answer to.
    """
    server_id = _as_bytes(server_id)
    eph_priv = crypto.random_scalar()
    eph_pub = crypto.base_exp(eph_priv)
    e_client = crypto.hash_parts("hmqv-eu", [eph_pub.encode(), msg.username])
    e_server = crypto.hash_parts("hmqv-es", [msg.client_eph_pub.encode(), server_id])
    reply_keypair = crypto.pk_gen()
    request = GpmAuthRequest(
        username=msg.username,
        blinded_element=msg.blinded_element,
        client_eph_pub=msg.client_eph_pub,
        server_eph_priv=eph_priv,
        e_client=e_client,
        e_server=e_server,
        reply_pk=reply_keypair.public,
    )
    tx = Transaction(TxKind.AUTH, crypto.pk_encrypt(gpm_public, request.encode()))
    session = ServerSession(
        server_id=server_id,
        username=msg.username,
        blinded_element=msg.blinded_element,
        client_eph_pub=msg.client_eph_pub,
        eph_priv=eph_priv,
        eph_pub=eph_pub,
        e_client=e_client,
        e_server=e_server,
        reply_keypair=reply_keypair,
    )
    return session, tx


def server_auth_phase2(
    session: ServerSession, reply_ciphertext: bytes
) -> Tuple[bytes, ServerToUser]:
    """Open the contract's reply, keep the session key, forward the rest.

    One-shot: the reply secret key is dropped on first use, so a session can
    never process a second reply.
    """
    if session.reply_keypair is None:
        raise StaleSession("reply key already consumed")
    plaintext = crypto.pk_decrypt(session.reply_keypair.secret, reply_ciphertext)
    session.reply_keypair = None
    reply = decode_expected(plaintext, GpmAuthResponse)
    session.session_key = reply.session_key
    out = ServerToUser(
        evaluated_element=reply.evaluated_element,
        server_eph_pub=session.eph_pub,
        envelope=reply.envelope,
    )
    return reply.session_key, out


# ---------------------------------------------------------------------------
# Key confirmation.
# ---------------------------------------------------------------------------


def transcript_digest(
    server_id: Union[str, bytes], init: UserAuthInit, reply: ServerToUser
) -> bytes:
    """Digest over everything both endpoints saw during one login."""
    return crypto.hash_parts(
        "transcript",
        [
            init.username,
            _as_bytes(server_id),
            init.blinded_element.encode(),
            init.client_eph_pub.encode(),
            reply.evaluated_element.encode(),
            reply.server_eph_pub.encode(),
            reply.envelope,
        ],
    )


def key_confirm(role: str, session_key: bytes, transcript: bytes) -> bytes:
    """Confirmation tag bound to the sender's role and the transcript."""
    label = _CONFIRM_LABELS.get(role)
    if label is None:
        raise ValueError("role must be 'client' or 'server'")
    return crypto.prf(session_key, label + transcript)


def verify_confirm(
    session_key: bytes, transcript: bytes, tag: bytes, expected_role: str
) -> bool:
    """Check the peer's confirmation tag (constant-time comparison)."""
    expected = key_confirm(expected_role, session_key, transcript)
    return _hmac.compare_digest(expected, tag)

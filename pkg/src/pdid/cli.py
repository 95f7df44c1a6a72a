"""Command-line harness: deploy a ledger plus contract, then drive
registration, login, password update, attack scenarios, and benchmarks
against it.

Deployment state lives in files named by a JSON config: the ledger record
file, the sealed contract state, the sealing key, and the contract public
key exported as hex. Passwords are read from environment variables
(PDID_PASSWORD, PDID_NEW_PASSWORD) or an interactive prompt, never from
argv. Exit codes: 0 success, 1 protocol failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import getpass
import json
import os
import statistics
import sys
import time
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

from . import __version__, actors, adversary, crypto
from .contract import GpmContract
from .errors import (
    AuthRejected,
    ConfirmFailed,
    DuplicateTransaction,
    PdidError,
    RateLimited,
    UsernameTaken,
    WrongPassword,
)
from .ledger import Ledger
from .wire import UpdatePlaintext

PASSWORD_ENV = "PDID_PASSWORD"
NEW_PASSWORD_ENV = "PDID_NEW_PASSWORD"

ATTACK_SCENARIOS = (
    "duplicate-register",
    "offline-gpm",
    "malicious-server-tamper",
    "replay",
    "online-guess",
)

# Reference timings (milliseconds) and sizes (bytes) from the original
# evaluation of this design, reported alongside measurements for comparison.
REFERENCE_MS = {
    "client_register": 7.0,
    "client_auth_total": 10.0,
    "server_auth_total": 1.63,
    "gpm_register": 6.54,
    "gpm_auth": 19.0,
}
REFERENCE_SIZES = {
    "metadata_record": 260,
    "client_ephemeral_state": 97,
    "message_band": (74, 300),
}


class UsageError(Exception):
    """Bad invocation or missing deployment; maps to exit code 2."""


# ---------------------------------------------------------------------------
# Config and deployment state.
# ---------------------------------------------------------------------------


@dataclass
class Config:
    ledger_path: str = "ledger.log"
    sealed_state_path: str = "gpm.sealed"
    contract_pk_path: str = "contract_pk.hex"
    sealing_key_path: str = "sealing.key"
    n_nodes: int = 4
    f: int = 1
    rate_limit_attempts: int = 10
    rate_limit_window_secs: float = 60.0

    @classmethod
    def load(cls, path: str) -> "Config":
        with open(path) as fh:
            raw = json.load(fh)
        unknown = set(raw) - set(cls.__dataclass_fields__)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**raw)
        base = os.path.dirname(os.path.abspath(path))
        for attr in (
            "ledger_path",
            "sealed_state_path",
            "contract_pk_path",
            "sealing_key_path",
        ):
            value = getattr(cfg, attr)
            if not os.path.isabs(value):
                setattr(cfg, attr, os.path.join(base, value))
        return cfg

    def write_defaults(self, path: str) -> None:
        defaults = {
            name: getattr(Config(), name) for name in Config.__dataclass_fields__
        }
        with open(path, "w") as fh:
            json.dump(defaults, fh, indent=2)
            fh.write("\n")


@dataclass
class Deployment:
    config: Config
    ledger: Ledger
    gpm: GpmContract
    sealing_key: bytes

    def save(self) -> None:
        sealed = self.gpm.seal(self.sealing_key)
        tmp = self.config.sealed_state_path + ".tmp"
        with open(tmp, "wb") as fh:
            fh.write(sealed)
        os.replace(tmp, self.config.sealed_state_path)


def load_config(path: str) -> Config:
    if not os.path.exists(path):
        raise UsageError(f"config not found: {path} (run init first)")
    return Config.load(path)


def load_deployment(config: Config) -> Deployment:
    for required in (
        config.ledger_path,
        config.sealed_state_path,
        config.sealing_key_path,
    ):
        if not os.path.exists(required):
            raise UsageError(f"missing deployment file: {required} (run init first)")
    ledger = Ledger.open(config.ledger_path)
    with open(config.sealing_key_path, "rb") as fh:
        sealing_key = fh.read()
    with open(config.sealed_state_path, "rb") as fh:
        sealed = fh.read()
    gpm = GpmContract.unseal(
        sealed,
        sealing_key,
        tx_verifier=ledger.tx_included,
        rate_limit=(config.rate_limit_attempts, config.rate_limit_window_secs),
    )
    return Deployment(config, ledger, gpm, sealing_key)


def ephemeral_deployment(
    rate_limit: Tuple[int, float] = (10, 60.0),
    clock: Callable[[], float] = time.time,
) -> Tuple[Ledger, GpmContract]:
    """In-memory ledger and contract for attack and bench runs."""
    ledger = Ledger()
    gpm = GpmContract.create(ledger.tx_included, rate_limit=rate_limit, clock=clock)
    return ledger, gpm


# ---------------------------------------------------------------------------
# Full-protocol drivers shared by commands, attacks, and tests.
# ---------------------------------------------------------------------------


def run_register(gpm: GpmContract, ledger: Ledger, username, password) -> None:
    tx = actors.client_register(username, password, gpm.public_key)
    proof = ledger.append(tx)
    gpm.new_pdid(tx, proof)


def run_login(
    gpm: GpmContract,
    ledger: Ledger,
    username,
    password,
    server_id,
    trace: Optional[List[Tuple[str, bytes]]] = None,
    tamper: Optional[Callable[[actors.ServerToUser], actors.ServerToUser]] = None,
) -> Tuple[bytes, bytes]:
    """One complete login with mutual key confirmation.

    Returns (client session key, server session key); raises ConfirmFailed
    if either confirmation tag fails (as it does under tampering).
    """
    client, init = actors.client_auth_init(username, password)
    if trace is not None:
        trace.append(("user->server", init.encode()))
    server, tx = actors.server_auth_phase1(server_id, init, gpm.public_key)
    if trace is not None:
        trace.append(("server->ledger", tx.payload))
    proof = ledger.append(tx)
    reply_ct = gpm.auth_pdid(tx, proof)
    if trace is not None:
        trace.append(("gpm->server", reply_ct))
    server_key, sent = actors.server_auth_phase2(server, reply_ct)
    delivered = tamper(sent) if tamper is not None else sent
    if trace is not None:
        trace.append(("server->user", delivered.encode()))
    client_key = actors.client_auth_finish(client, password, server_id, delivered)

    client_transcript = actors.transcript_digest(server_id, init, delivered)
    server_transcript = actors.transcript_digest(server_id, init, sent)
    client_tag = actors.key_confirm("client", client_key, client_transcript)
    if not actors.verify_confirm(server_key, server_transcript, client_tag, "client"):
        raise ConfirmFailed("client confirmation tag rejected")
    server_tag = actors.key_confirm("server", server_key, server_transcript)
    if not actors.verify_confirm(client_key, client_transcript, server_tag, "server"):
        raise ConfirmFailed("server confirmation tag rejected")
    return client_key, server_key


def run_update(gpm: GpmContract, ledger: Ledger, username, old_password, new_password) -> None:
    tx = actors.client_update(username, old_password, new_password, gpm.public_key)
    proof = ledger.append(tx)
    gpm.update_pdid(tx, proof)


# ---------------------------------------------------------------------------
# Attack scenarios.
# ---------------------------------------------------------------------------


def run_attack(scenario: str) -> dict:
    """Stage one adversarial scenario against a fresh in-memory deployment.

    Result dict always contains `defense_held`; details vary per scenario.
    """
    sim_now = [1000.0]
    ledger, gpm = ephemeral_deployment(clock=lambda: sim_now[0])
    result = {"scenario": scenario}

    if scenario == "duplicate-register":
        result["expected"] = "second registration rejected; first password still logs in"
        tx1 = actors.client_register(b"race-user", b"first-pw", gpm.public_key)
        tx2 = actors.client_register(b"race-user", b"second-pw", gpm.public_key)
        gpm.new_pdid(tx1, ledger.append(tx1))
        try:
            gpm.new_pdid(tx2, ledger.append(tx2))
            second = "accepted"
        except UsernameTaken:
            second = "rejected"
        client_key, server_key = run_login(gpm, ledger, b"race-user", b"first-pw", b"host")
        first_pw_works = client_key == server_key
        result["observed"] = (
            f"second registration {second}; "
            f"first password {'works' if first_pw_works else 'broken'}"
        )
        result["defense_held"] = second == "rejected" and first_pw_works

    elif scenario == "offline-gpm":
        n = 100
        result["expected"] = f"{n}/{n} off-ledger probes rejected, 0 evaluated"
        run_register(gpm, ledger, b"probe-target", b"real-password")
        leaked = ledger.leak_node_seeds(ledger.f)
        candidates = [f"guess-{i}".encode() for i in range(n - 1)] + [b"real-password"]
        outcomes = adversary.malicious_node_offline_probe(
            gpm, leaked, b"probe-target", candidates
        )
        rejections = outcomes.count("rejected")
        result["observed"] = f"{rejections}/{n} rejected"
        result["defense_held"] = rejections == n

    elif scenario == "malicious-server-tamper":
        result["expected"] = "substituted key share detected at key confirmation"
        run_register(gpm, ledger, b"tamper-user", b"tamper-pw")
        fake_share = crypto.base_exp(crypto.random_scalar())

        def tamper(msg: actors.ServerToUser) -> actors.ServerToUser:
            return actors.ServerToUser(msg.evaluated_element, fake_share, msg.envelope)

        try:
            run_login(gpm, ledger, b"tamper-user", b"tamper-pw", b"host", tamper=tamper)
            result["observed"] = "tampered keys accepted"
            result["defense_held"] = False
        except ConfirmFailed:
            result["observed"] = "tampering detected at key confirmation"
            result["defense_held"] = True

    elif scenario == "replay":
        result["expected"] = "replayed transaction rejected at ledger append"
        run_register(gpm, ledger, b"replay-user", b"replay-pw")
        _, init = actors.client_auth_init(b"replay-user", b"replay-pw")
        _, tx = actors.server_auth_phase1(b"host", init, gpm.public_key)
        ledger.append(tx)
        try:
            ledger.append(tx)
            result["observed"] = "replayed transaction accepted"
            result["defense_held"] = False
        except DuplicateTransaction:
            result["observed"] = "replayed transaction rejected at append"
            result["defense_held"] = True

    elif scenario == "online-guess":
        result["expected"] = "10 wrong-password rejections, then rate-limited on the 11th"
        run_register(gpm, ledger, b"guess-target", b"correct-horse")
        outcomes = []
        for i in range(11):
            sim_now[0] += 0.5  # rapid-fire attempts inside one window
            try:
                run_login(gpm, ledger, b"guess-target", f"wrong-{i}".encode(), b"host")
                outcomes.append("login-succeeded")
            except WrongPassword:
                outcomes.append("wrong-password")
            except RateLimited:
                outcomes.append("rate-limited")
        result["observed"] = ", ".join(outcomes)
        result["defense_held"] = (
            outcomes[:10] == ["wrong-password"] * 10 and outcomes[10] == "rate-limited"
        )

    else:
        raise UsageError(f"unknown attack scenario: {scenario}")

    return result


# ---------------------------------------------------------------------------
# Benchmark.
# ---------------------------------------------------------------------------


def _stats(samples: List[float]) -> dict:
    ms = [s * 1000 for s in samples]
    return {
        "mean_ms": statistics.fmean(ms),
        "median_ms": statistics.median(ms),
        "stdev_ms": statistics.pstdev(ms) if len(ms) > 1 else 0.0,
    }


def run_benchmark(iterations: int = 50) -> dict:
    """Time every protocol stage over fresh users and report sizes.

    Measured numbers sit next to the reference timings so regressions and
    instantiation differences stay visible.
    """
    ledger, gpm = ephemeral_deployment()
    raw: dict[str, List[float]] = {
        name: []
        for name in (
            "client_register",
            "gpm_register",
            "client_auth_init",
            "server_phase1",
            "gpm_auth",
            "server_phase2",
            "client_auth_finish",
            "client_auth_total",
            "server_auth_total",
            "login_roundtrip",
        )
    }
    server_id = b"bench.example"
    perf = time.perf_counter
    for i in range(iterations):
        username = f"bench-user-{i:06d}".encode()
        password = f"bench-pw-{i}".encode()

        t0 = perf()
        tx = actors.client_register(username, password, gpm.public_key)
        t1 = perf()
        proof = ledger.append(tx)
        t2 = perf()
        gpm.new_pdid(tx, proof)
        t3 = perf()
        raw["client_register"].append(t1 - t0)
        raw["gpm_register"].append(t3 - t2)

        l0 = perf()
        client, init = actors.client_auth_init(username, password)
        l1 = perf()
        server, atx = actors.server_auth_phase1(server_id, init, gpm.public_key)
        l2 = perf()
        aproof = ledger.append(atx)
        l3 = perf()
        reply = gpm.auth_pdid(atx, aproof)
        l4 = perf()
        server_key, sent = actors.server_auth_phase2(server, reply)
        l5 = perf()
        client_key = actors.client_auth_finish(client, password, server_id, sent)
        l6 = perf()
        transcript = actors.transcript_digest(server_id, init, sent)
        ctag = actors.key_confirm("client", client_key, transcript)
        assert actors.verify_confirm(server_key, transcript, ctag, "client")
        stag = actors.key_confirm("server", server_key, transcript)
        assert actors.verify_confirm(client_key, transcript, stag, "server")
        l7 = perf()

        raw["client_auth_init"].append(l1 - l0)
        raw["server_phase1"].append(l2 - l1)
        raw["gpm_auth"].append(l4 - l3)
        raw["server_phase2"].append(l5 - l4)
        raw["client_auth_finish"].append(l6 - l5)
        raw["client_auth_total"].append((l1 - l0) + (l6 - l5))
        raw["server_auth_total"].append((l2 - l1) + (l5 - l4))
        raw["login_roundtrip"].append(l7 - l0)

    # Byte sizes for a representative login, frozen-format widths.
    username = b"sizing-user"
    password = b"sizing-pw"
    run_register(gpm, ledger, username, password)
    client, init = actors.client_auth_init(username, password)
    server, atx = actors.server_auth_phase1(server_id, init, gpm.public_key)
    reply = gpm.auth_pdid(atx, ledger.append(atx))
    _, sent = actors.server_auth_phase2(server, reply)
    state_len = len(
        actors.ClientSession(
            username, crypto.random_scalar(), crypto.random_scalar(),
            crypto.base_exp(crypto.random_scalar()),
        ).ephemeral_state_bytes()
    )
    meta = actors.build_metadata(password)
    update_pt = UpdatePlaintext(username, password, meta)
    sizes = {
        "user_auth_init": len(init.encode()),
        "server_to_user": len(sent.encode()),
        "registration_plaintext": None,  # filled below from a rebuilt message
        "update_plaintext": len(update_pt.encode()),
        "metadata_record": len(meta.encode()),
        "client_ephemeral_state": state_len,
        "register_tx_payload": None,
        "auth_tx_payload": len(atx.payload),
        "gpm_reply_ciphertext": len(reply),
    }
    rtx = actors.client_register(b"sizing-user-2", password, gpm.public_key)
    sizes["register_tx_payload"] = len(rtx.payload)
    sizes["registration_plaintext"] = len(rtx.payload) - crypto.PKE_OVERHEAD
    sizes["gpm_auth_request_plaintext"] = len(atx.payload) - crypto.PKE_OVERHEAD
    sizes["gpm_auth_response_plaintext"] = len(reply) - crypto.PKE_OVERHEAD

    timings = {name: _stats(samples) for name, samples in raw.items()}
    noise_flags = sorted(
        name for name, st in timings.items() if st["stdev_ms"] > st["mean_ms"]
    )
    server_mean_s = statistics.fmean(raw["server_auth_total"])
    return {
        "iterations": iterations,
        "timings_ms": timings,
        "noise_flags": noise_flags,
        "derived": {
            "server_auths_per_sec": 1.0 / server_mean_s if server_mean_s else None,
            "server_auth_total_median_ms": timings["server_auth_total"]["median_ms"],
            "gpm_auth_median_ms": timings["gpm_auth"]["median_ms"],
            "gpm_register_median_ms": timings["gpm_register"]["median_ms"],
            "login_roundtrip_median_ms": timings["login_roundtrip"]["median_ms"],
        },
        "sizes_bytes": sizes,
        "reference_ms": REFERENCE_MS,
        "reference_sizes_bytes": {
            "metadata_record": REFERENCE_SIZES["metadata_record"],
            "client_ephemeral_state": REFERENCE_SIZES["client_ephemeral_state"],
            "plaintext_message_band": list(REFERENCE_SIZES["message_band"]),
        },
    }


# ---------------------------------------------------------------------------
# Command plumbing.
# ---------------------------------------------------------------------------


def _get_password(env_var: str, prompt: str) -> bytes:
    value = os.environ.get(env_var)
    if value is not None:
        return value.encode("utf-8")
    try:
        return getpass.getpass(prompt).encode("utf-8")
    except (EOFError, getpass.GetPassWarning) as exc:  # pragma: no cover
        raise UsageError(f"set {env_var} or provide a terminal for the prompt") from exc


def _emit(payload: dict, as_json: bool) -> None:
    if as_json:
        print(json.dumps(payload, indent=2, sort_keys=True))
        return
    for key, value in payload.items():
        print(f"{key}: {value}")


def _error_code(exc: PdidError) -> str:
    if isinstance(exc, AuthRejected):
        return AuthRejected.public_code
    name = type(exc).__name__
    out = [name[0].lower()]
    for ch in name[1:]:
        if ch.isupper():
            out.append("-")
            out.append(ch.lower())
        else:
            out.append(ch)
    return "".join(out)


def cmd_init(args) -> dict:
    config_path = args.config
    parent = os.path.dirname(os.path.abspath(config_path))
    os.makedirs(parent, exist_ok=True)
    if not os.path.exists(config_path):
        Config().write_defaults(config_path)
    config = Config.load(config_path)
    already = os.path.exists(config.ledger_path) and os.path.exists(
        config.sealed_state_path
    )
    if already and not args.force:
        # Idempotent rerun: leave the live deployment untouched.
        return {
            "status": "already-initialized",
            "config": config_path,
            "ledger": config.ledger_path,
        }
    ledger = Ledger.create(config.ledger_path, config.n_nodes, config.f)
    gpm = GpmContract.create(
        ledger.tx_included,
        rate_limit=(config.rate_limit_attempts, config.rate_limit_window_secs),
    )
    sealing_key = crypto.random_bytes(crypto.KEY_LEN)
    with open(config.sealing_key_path, "wb") as fh:
        fh.write(sealing_key)
    os.chmod(config.sealing_key_path, 0o600)
    Deployment(config, ledger, gpm, sealing_key).save()
    with open(config.contract_pk_path, "w") as fh:
        fh.write(gpm.public_key.hex() + "\n")
    ledger.close()
    return {
        "status": "initialized",
        "config": config_path,
        "ledger": config.ledger_path,
        "nodes": config.n_nodes,
        "fault_tolerance": config.f,
        "contract_public_key": gpm.public_key.hex(),
    }


def cmd_register(args) -> dict:
    config = load_config(args.config)
    password = _get_password(PASSWORD_ENV, "password: ")
    dep = load_deployment(config)
    try:
        run_register(dep.gpm, dep.ledger, args.username.encode(), password)
        dep.save()
    finally:
        dep.ledger.close()
    return {"status": "registered", "username": args.username}


def cmd_login(args) -> dict:
    config = load_config(args.config)
    password = _get_password(PASSWORD_ENV, "password: ")
    dep = load_deployment(config)
    try:
        client_key, server_key = run_login(
            dep.gpm, dep.ledger, args.username.encode(), password, args.server.encode()
        )
    finally:
        # Persist even on failure: the contract already counted the attempt.
        dep.save()
        dep.ledger.close()
    fingerprint = crypto.hash_parts("session-key-fingerprint", [client_key]).hex()[:16]
    return {
        "status": "authenticated",
        "username": args.username,
        "server": args.server,
        "keys_match": client_key == server_key,
        "session_key_fingerprint": fingerprint,
    }


def cmd_update(args) -> dict:
    config = load_config(args.config)
    old_password = _get_password(PASSWORD_ENV, "current password: ")
    new_password = _get_password(NEW_PASSWORD_ENV, "new password: ")
    dep = load_deployment(config)
    try:
        run_update(dep.gpm, dep.ledger, args.username.encode(), old_password, new_password)
        dep.save()
    finally:
        dep.ledger.close()
    return {"status": "password-updated", "username": args.username}


def cmd_attack(args) -> dict:
    return run_attack(args.scenario)


def cmd_bench(args) -> dict:
    return run_benchmark(args.iterations)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pdid",
        description="Password-authenticated identities over a confidential ledger contract.",
    )
    parser.add_argument("--config", default="pdid.json", help="deployment config path")
    parser.add_argument(
        "--seed",
        type=int,
        default=None,
        help="seed all randomness deterministically (INSECURE, testing only)",
    )
    parser.add_argument(
        "--json", dest="as_json", action="store_true", help="machine-readable output"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="create ledger, contract state, and key files")
    p.add_argument(
        "--force", action="store_true", help="recreate even if a deployment exists"
    )

    p = sub.add_parser("register", help="register a username under a password")
    p.add_argument("--username", required=True)

    p = sub.add_parser("login", help="authenticate and confirm a session key")
    p.add_argument("--username", required=True)
    p.add_argument("--server", default="server.example")

    p = sub.add_parser("update", help="change the password for a username")
    p.add_argument("--username", required=True)

    p = sub.add_parser("attack", help="run an adversarial scenario")
    p.add_argument("scenario", choices=ATTACK_SCENARIOS)

    p = sub.add_parser("bench", help="measure per-stage timings and sizes")
    p.add_argument("--iterations", type=int, default=50)

    return parser


_COMMANDS = {
    "init": cmd_init,
    "register": cmd_register,
    "login": cmd_login,
    "update": cmd_update,
    "attack": cmd_attack,
    "bench": cmd_bench,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.seed is not None:
        crypto.set_insecure_seed(args.seed)
    try:
        result = _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except AuthRejected:
        # Unknown-user and wrong-password collapse to one opaque code here.
        _emit({"status": "failed", "error": AuthRejected.public_code}, args.as_json)
        return 1
    except PdidError as exc:
        _emit({"status": "failed", "error": _error_code(exc)}, args.as_json)
        return 1
    _emit(result, args.as_json)
    if args.command == "attack" and not result.get("defense_held", False):
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line driver: key ceremony, handshakes, attacks, freshness game.

Exit codes: 0 success or expected scenario outcome, 1 protocol or
verification failure, 2 usage error.  Every command is deterministic given
its flags and ``--seed``; transcripts and reports are byte-identical across
repeated runs.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

from .algebra import get_profile, save_profile
from .errors import GsmIbcError, ProtocolError
from .harness import (
    ATTACK_BLOCKED,
    ATTACK_SUCCEEDED,
    INTRUDER_STRATEGIES,
    World,
    WorldConfig,
    freshness_game,
    scenario_anonymity,
    scenario_false_network,
    scenario_impersonate_ms,
    scenario_replay,
)
from .ibc import extract, setup
from .instrument import OpCounters
from .protocol import SimCard
from .rng import DetRng
from . import keyfiles

PROFILE_FILE = "profile.params"

_ATTACK_EXPECTATIONS = {
    ("replay", "ibc"): ATTACK_BLOCKED,
    ("impersonate-ms", "ibc"): ATTACK_BLOCKED,
    ("false-network", "ibc"): ATTACK_BLOCKED,
    ("false-network", "baseline"): ATTACK_SUCCEEDED,
    ("anonymity", "ibc"): ATTACK_BLOCKED,
}


def _fingerprint(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()[:16]


def _derive_ki(seed: int, imsi: bytes) -> bytes:
    return hashlib.sha256(b"GSMIBC-KI" + seed.to_bytes(8, "big") + imsi).digest()[:16]


def _load_out_dir(args) -> tuple[Path, "object"]:
    out = Path(args.out)
    profile_path = out / PROFILE_FILE
    if not profile_path.exists():
        raise GsmIbcError(f"no setup artifacts in {out} (run 'gsmibc setup' first)")
    from .algebra import load_profile

    return out, load_profile(profile_path, name="configured")


def _load_world(args, mode: str) -> World:
    out, profile = _load_out_dir(args)
    hlr_id, master = keyfiles.load_hlr_keys(out, profile)
    vlr_id = keyfiles.load_vlr_id(out)
    subscribers = keyfiles.load_subscribers(out)
    if not subscribers:
        raise GsmIbcError("no registered subscribers (run 'gsmibc register' first)")
    wanted = getattr(args, "imsi", None)
    if wanted is not None:
        chosen = [s for s in subscribers if s[0] == wanted.encode()]
        if not chosen:
            raise GsmIbcError(f"imsi {wanted!r} is not registered")
        subscribers = chosen + [s for s in subscribers if s[0] != wanted.encode()]
    sims: dict[bytes, SimCard] = {}
    kis: dict[bytes, bytes] = {}
    for imsi, _tmsi in subscribers:
        sim, ki = keyfiles.load_sim(out, profile, imsi)
        sims[imsi] = sim
        kis[imsi] = ki
    config = WorldConfig(
        profile=profile,
        seed=args.seed,
        subscribers=tuple(subscribers),
        hlr_id=hlr_id,
        vlr_id=vlr_id,
        mode=mode,
    )
    return World(config, master=master, loaded_sims=sims, kis=kis)


def cmd_setup(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    profile = get_profile(args.profile)
    save_profile(profile, out / PROFILE_FILE)
    hlr_id = args.hlr_id.encode()
    vlr_id = args.vlr_id.encode()
    master = setup(profile, DetRng(f"setup#{args.seed}"))
    keyfiles.save_hlr_keys(out, profile, hlr_id, master)
    keyfiles.save_vlr_keys(out, profile, vlr_id, hlr_id, master)
    (out / keyfiles.SUBSCRIBERS_FILE).write_text("")
    hlr_key = extract(profile, master, hlr_id)
    print(f"profile: {profile.name} (p: {profile.p.bit_length()} bits, q: {profile.q.bit_length()} bits)")
    print(f"P_pub fingerprint:   {_fingerprint(profile.encode_point(master.p_pub))}")
    print(f"HLR Q_id fingerprint: {_fingerprint(profile.encode_point(hlr_key.q_id))}")
    print(f"wrote {out / PROFILE_FILE}, {out / keyfiles.HLR_KEY_FILE}, {out / keyfiles.VLR_KEY_FILE}")
    return 0


def cmd_register(args) -> int:
    out, profile = _load_out_dir(args)
    hlr_id, master = keyfiles.load_hlr_keys(out, profile)
    imsi = args.imsi.encode()
    tmsi = (args.tmsi or f"T-{hashlib.sha256(imsi).hexdigest()[:8]}").encode()
    existing = keyfiles.load_subscribers(out)
    if any(imsi == known for known, _ in existing):
        print(f"error: imsi {args.imsi!r} already registered", file=sys.stderr)
        return 1
    if any(tmsi == known for _, known in existing):
        print(f"error: tmsi collision for {tmsi!r}", file=sys.stderr)
        return 1
    key = extract(profile, master, imsi)
    sim = SimCard(imsi=imsi, tmsi=tmsi, key_point=key.d_id)
    ki = _derive_ki(args.seed, imsi)
    path = keyfiles.save_sim(out, profile, sim, ki)
    keyfiles.append_subscriber(out, imsi, tmsi)
    print(f"registered {args.imsi} (tmsi {tmsi.decode()})")
    print(f"K' fingerprint: {_fingerprint(profile.encode_point(sim.key_point))}")
    print(f"wrote {path}")
    return 0


def _write_transcript(out: Path, name: str, transcript) -> Path:
    path = out / f"transcript_{name}.jsonl"
    path.write_text(transcript.to_jsonl())
    return path


def cmd_handshake(args) -> int:
    world = _load_world(args, mode=args.mode)
    out = Path(args.out)
    if args.mode == "baseline":
        accepted = world.run_baseline_session(1)
        _write_transcript(out, "handshake_baseline", world.transcript)
        print(f"baseline SRES comparison: {'match' if accepted else 'mismatch'}")
        print(f"transcript: {out / 'transcript_handshake_baseline.jsonl'}")
        return 0 if accepted else 1
    try:
        run = world.run_session(1)
    except ProtocolError as err:
        _write_transcript(out, "handshake", world.transcript)
        print(f"error: {err.code}", file=sys.stderr)
        return 1
    except GsmIbcError as err:
        _write_transcript(out, "handshake", world.transcript)
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 1
    _write_transcript(out, "handshake", world.transcript)
    keys = {
        "MS": run.ms_result.session_key,
        "VLR": run.vlr_result.session_key,
        "HLR": run.hlr_result.session_key,
    }
    for who, key in keys.items():
        print(f"{who} session key fingerprint: {_fingerprint(key)}")
    counters = run.counters
    print(f"MS ops: scalar_mul={counters.scalar_mul} pairing={counters.pairing} ibe={counters.ibe}")
    equal = len(set(keys.values())) == 1
    authenticated = all(
        (run.ms_result.peer_authenticated, run.vlr_result.peer_authenticated,
         run.hlr_result.peer_authenticated)
    )
    budget_ok = (counters.scalar_mul, counters.pairing, counters.ibe) == (1, 0, 0)
    print(f"keys equal: {str(equal).lower()}  mutual auth: {str(authenticated).lower()}")
    print(f"transcript: {out / 'transcript_handshake.jsonl'}")
    return 0 if equal and authenticated and budget_ok else 1


def cmd_attack(args) -> int:
    expected = _ATTACK_EXPECTATIONS.get((args.scenario, args.mode))
    if expected is None:
        print(
            f"error: scenario {args.scenario!r} is not defined for mode {args.mode!r}",
            file=sys.stderr,
        )
        return 2
    world_mode = "baseline" if args.mode == "baseline" else "ibc"
    world = _load_world(args, mode=world_mode)
    config = world.config
    if args.scenario == "replay":
        report = scenario_replay(config)
    elif args.scenario == "impersonate-ms":
        report = scenario_impersonate_ms(config, fabrications=args.fabrications)
    elif args.scenario == "false-network":
        report = scenario_false_network(config, mode=args.mode)
    else:
        report = scenario_anonymity(config, sessions=args.sessions)
    out = Path(args.out)
    report_path = out / f"report_{args.scenario}.jsonl"
    report_path.write_text(report.to_jsonl() + report.transcript.to_jsonl())
    print(f"scenario: {args.scenario} (mode {args.mode})")
    print(f"outcome: {report.outcome}")
    for name, value in report.subcases.items():
        print(f"  {name}: {value}")
    print(f"report: {report_path}")
    if report.outcome != expected:
        print(f"error: expected {expected}", file=sys.stderr)
        return 1
    return 0


def cmd_freshness(args) -> int:
    world = _load_world(args, mode="ibc")
    result = freshness_game(
        world.config, trials=args.trials, pool_size=args.pool, strategy=args.strategy
    )
    half_width = 1.96 * (0.25 / args.trials) ** 0.5
    out = Path(args.out)
    report_path = out / "report_freshness.jsonl"
    report_path.write_text(result.to_jsonl())
    print(f"strategy: {result.strategy}")
    print(f"trials: {result.trials}  pool: {result.pool_size}  correct: {result.correct}")
    print(f"advantage: {result.advantage:.4f} (95% CI half-width {half_width:.4f})")
    print(f"report: {report_path}")
    if args.strategy == "omniscient":
        print("omniscient strategy is the sanity ceiling, not a threat model")
        return 0
    return 0 if result.advantage <= 0.05 else 1


def cmd_transcript(args) -> int:
    path = Path(args.file)
    if not path.exists():
        print(f"error: no such file {path}", file=sys.stderr)
        return 1
    for line in path.read_text().splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        if record.get("type") == "scenario_report":
            print(f"[report] {record['scenario']}: {record['outcome']} {record['subcases']}")
            continue
        if record.get("type") == "freshness_game":
            print(f"[report] freshness {record['strategy']}: advantage {record['advantage']}")
            continue
        print(
            f"{record['seq']:>4} {record['channel']:<4} {record['direction']:<8} "
            f"{record['adversary_action']:<10} {record['parsed_summary']}"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gsmibc",
        description="Identity-based GSM authenticated key exchange: keys, handshakes, attacks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_out=True):
        p.add_argument("--seed", type=int, default=0, help="deterministic run seed")
        if needs_out:
            p.add_argument("--out", required=True, help="artifact directory")

    p_setup = sub.add_parser("setup", help="generate system parameters and entity keys")
    common(p_setup)
    p_setup.add_argument(
        "--profile",
        default=os.environ.get("GSMIBC_PROFILE", "test"),
        help="test | demo | path to a profile file (env GSMIBC_PROFILE)",
    )
    p_setup.add_argument("--hlr-id", default="HLR-01")
    p_setup.add_argument("--vlr-id", default="VLR-01")
    p_setup.set_defaults(func=cmd_setup)

    p_reg = sub.add_parser("register", help="register a subscriber and write its SIM file")
    common(p_reg)
    p_reg.add_argument("imsi", help="permanent subscriber identity")
    p_reg.add_argument("--tmsi", help="temporary identity (derived when omitted)")
    p_reg.set_defaults(func=cmd_register)

    p_hs = sub.add_parser("handshake", help="run one authenticated key exchange")
    common(p_hs)
    p_hs.add_argument("--mode", choices=("ibc", "baseline"), default="ibc")
    p_hs.add_argument("--imsi", help="subscriber to drive (default: first registered)")
    p_hs.set_defaults(func=cmd_handshake)

    p_atk = sub.add_parser("attack", help="run an attack scenario and check its outcome")
    common(p_atk)
    p_atk.add_argument(
        "--scenario",
        required=True,
        choices=("replay", "impersonate-ms", "false-network", "anonymity"),
    )
    p_atk.add_argument("--mode", choices=("ibc", "baseline"), default="ibc")
    p_atk.add_argument("--sessions", type=int, default=100, help="sessions for anonymity scan")
    p_atk.add_argument("--fabrications", type=int, default=100, help="forgeries for impersonation")
    p_atk.set_defaults(func=cmd_attack)

    p_fresh = sub.add_parser("freshness", help="challenger-intruder freshness game")
    common(p_fresh)
    p_fresh.add_argument("--trials", type=int, default=10000)
    p_fresh.add_argument("--pool", type=int, default=16)
    p_fresh.add_argument("--strategy", choices=INTRUDER_STRATEGIES, default="random")
    p_fresh.set_defaults(func=cmd_freshness)

    p_tr = sub.add_parser("transcript", help="pretty-print a transcript or report file")
    p_tr.add_argument("file")
    p_tr.set_defaults(func=cmd_transcript)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ProtocolError as err:
        print(f"error: {err.code}", file=sys.stderr)
        return 1
    except GsmIbcError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()

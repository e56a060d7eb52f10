"""Command-line driver.

Subcommands: ``run`` (authenticated sessions, optionally chained and
intercepted), ``verify-pqc`` (family verifier report), ``attack`` (the three
attack harnesses), ``view`` (interceptor-view averaging) and ``selftest``
(a fast invariant sweep).

Every subcommand is a pure function of its arguments: the master generator is
seeded from ``--seed`` and all batch work derives child streams from it, so
identical invocations produce byte-identical reports. Traces are JSONL, one
record per wire message plus a final record; summary reports are single JSON
documents with floats rendered at 17 significant digits. Wall-clock timings
never enter report files (they would break reproducibility) and go to stderr
instead.

Exit codes: 0 success or accepted session, 2 protocol ABORT verdict,
1 usage, resource-limit or I/O errors.
"""

from __future__ import annotations

import argparse
import json
import re
import sys

import numpy as np

from . import adversary, analysis, boolperm, pqc, protocol, qsim
from .bits import all_bits, random_bits, validate_bits
from .errors import ResourceLimitError

ABORT_EXIT = 2
FAILURE_EXIT = 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def render_json(value) -> str:
    """JSON text with floats at 17 significant digits and stable field order."""
    tokens: list[str] = []

    def convert(obj):
        if isinstance(obj, (bool, np.bool_)):
            return bool(obj)
        if isinstance(obj, np.integer):
            return int(obj)
        if isinstance(obj, np.floating):
            obj = float(obj)
        if isinstance(obj, float):
            tokens.append(format(obj, ".17g"))
            return f"\x00{len(tokens) - 1}\x00"
        if isinstance(obj, dict):
            return {key: convert(item) for key, item in obj.items()}
        if isinstance(obj, (list, tuple)):
            return [convert(item) for item in obj]
        return obj

    # json.dumps escapes the \x00 sentinels to \u0000, which cannot occur in
    # any real payload string, so the substitution is collision-free.
    text = json.dumps(convert(value), ensure_ascii=False)
    return re.sub(r'"\\u0000(\d+)\\u0000"', lambda m: tokens[int(m.group(1))], text)


def emit_json(value, path: str | None) -> None:
    """Single-document JSON report; stdout when no path is given."""
    text = render_json(value) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)


def emit_jsonl(records, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(render_json(record) + "\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qnksim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run authenticated sessions")
    run.add_argument("--n", type=int, required=True, help="plaintext width (even)")
    run.add_argument("--pqc", default="pqc4", help="encryption family (pqc1..pqc4)")
    run.add_argument("--plaintext", required=True, help="n-bit plaintext")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--sessions", type=int, default=1,
                     help="chain this many sessions, evolving the tag")
    run.add_argument("--attack", choices=["tamper-round1", "replace-round2"],
                     help="apply a named interception hook")
    run.add_argument("--trace", help="write a JSONL wire trace to this file")

    verify = sub.add_parser("verify-pqc", help="verifier report for one family")
    verify.add_argument("--family", required=True)
    verify.add_argument("--n", type=int, default=1)
    verify.add_argument("--report", help="write the JSON report here (default stdout)")

    attack = sub.add_parser("attack", help="run an attack harness")
    attack.add_argument("--type", required=True, dest="attack_type",
                        choices=["mim-unauth", "forge-auth", "basis-measure"])
    attack.add_argument("--pqc", default="pqc4")
    attack.add_argument("--n", type=int, required=True)
    attack.add_argument("--trials", type=int, default=100)
    attack.add_argument("--seed", type=int, default=0)
    attack.add_argument("--strategy", choices=list(adversary.FORGE_STRATEGIES),
                        help="forgery strategy (forge-auth only)")
    attack.add_argument("--plaintext", help="fixed plaintext (default: drawn from seed)")
    attack.add_argument("--exhaustive", action="store_true",
                        help="exact enumeration instead of sampling (forge-auth, n=2)")
    attack.add_argument("--report", help="write the JSON report here (default stdout)")

    view = sub.add_parser("view", help="interceptor-view averaging for one round")
    view.add_argument("--round", type=int, required=True, dest="round_no")
    view.add_argument("--n", type=int, required=True)
    view.add_argument("--plaintext", required=True)
    mode = view.add_mutually_exclusive_group()
    mode.add_argument("--exhaustive", action="store_true", default=True)
    mode.add_argument("--samples", type=int)
    view.add_argument("--seed", type=int, default=0)
    view.add_argument("--report", help="write the JSON report here (default stdout)")

    sub.add_parser("selftest", help="fast invariant sweep (<10s)")
    return parser


def _cmd_run(args) -> int:
    family = pqc.family_by_name(args.pqc)
    cfg = protocol.SessionConfig(n=args.n, family=family, seed=args.seed)
    validate_bits(args.plaintext, args.n, "plaintext")
    rng = np.random.default_rng(args.seed)
    secret = protocol.AuthSecret(random_bits(rng, args.n), random_bits(rng, args.n // 2))
    hook = adversary.interception_hook(args.attack, cfg, rng) if args.attack else None

    records = []
    aborted = False
    for index in range(args.sessions):
        transcript = protocol.run_session(cfg, secret, args.plaintext, rng, hook=hook)
        records.extend(protocol.trace_records(transcript))
        if transcript.aborted:
            print(f"session {index}: ABORT at {transcript.aborted_at}")
            aborted = True
            break
        print(
            f"session {index}: final={transcript.final} "
            f"updated_r={transcript.updated_r}"
        )
        secret = protocol.AuthSecret(secret.s, transcript.updated_r)

    if args.trace:
        emit_jsonl(records, args.trace)
    return ABORT_EXIT if aborted else 0


def _cmd_verify_pqc(args) -> int:
    family = pqc.family_by_name(args.family)
    report = pqc.verifier_report(family, args.n)
    emit_json(report, args.report)
    return 0


def _cmd_attack(args) -> int:
    family = pqc.family_by_name(args.pqc)
    cfg = protocol.SessionConfig(n=args.n, family=family, seed=args.seed)
    rng = np.random.default_rng(args.seed)

    if args.attack_type == "forge-auth":
        if not args.strategy:
            raise UsageError("--strategy is required for forge-auth")
        outcome = adversary.forge_authenticated(
            cfg, args.strategy, args.trials, rng, exhaustive=args.exhaustive
        )
    else:
        x = args.plaintext or random_bits(rng, args.n)
        validate_bits(x, args.n, "plaintext")
        if args.attack_type == "mim-unauth":
            outcome = adversary.mim_unauthenticated(cfg, family, x, rng, args.trials)
        else:
            outcome = adversary.basis_measure_attack(cfg, family, x, rng, args.trials)

    report = {
        "attack": outcome.attack_id,
        "pqc": family.family_id,
        "n": args.n,
        "seed": args.seed,
        "trials": outcome.trials,
        "successes": outcome.successes,
        "success_rate": outcome.success_rate,
        "success": outcome.success,
        "recovered": outcome.recovered,
        "detection": outcome.detection,
        "exhaustive": outcome.exhaustive,
    }
    emit_json(report, args.report)
    return 0


def _cmd_view(args) -> int:
    cfg = protocol.SessionConfig(n=args.n, seed=args.seed)
    validate_bits(args.plaintext, args.n, "plaintext")
    exhaustive = args.samples is None
    report, averaged = analysis.adversary_view(
        args.round_no, args.plaintext, cfg,
        exhaustive=exhaustive, samples=args.samples,
    )
    payload = {
        "round": report.round_no,
        "n": report.n,
        "plaintext": report.plaintext,
        "mode": report.mode,
        "space_size": report.space_size,
        "trace_distance_to_mixed": report.trace_distance_to_mixed,
        "standard_error": report.standard_error,
    }
    if args.n <= 2:
        payload["density"] = qsim.density_to_json(averaged)
    print(f"view round {report.round_no}: {report.runtime_seconds:.2f}s", file=sys.stderr)
    emit_json(payload, args.report)
    return 0


def _cmd_selftest(args) -> int:
    failures = 0

    def check(label: str, ok: bool) -> None:
        nonlocal failures
        print(f"{'PASS' if ok else 'FAIL'} {label}")
        failures += 0 if ok else 1

    expectations = {"PQC1": True, "PQC2": True, "PQC3": False, "PQC4": True}
    for name, expected in expectations.items():
        family = pqc.FAMILIES[name]
        ok_basis, _ = pqc.orthonormal_basis_check(family)
        ok_anti = pqc.anticommutation_check(family)
        check(f"{name} verifier checks", ok_basis == expected and ok_anti == expected)
        if expected:
            averaged = pqc.perfect_encryption_average(
                family, qsim.to_density(qsim.PureState.basis("0"))
            )
            distance = qsim.trace_distance(averaged, qsim.maximally_mixed(1))
            check(f"{name} perfect encryption at n=1", distance <= 1e-9)

    for n in (2, 4):
        ok = all(boolperm.verify_bijection(s, n) for s in all_bits(n))
        check(f"bijectivity, all keys, n={n}", ok)

    for n in (2, 4, 6):
        cfg = protocol.SessionConfig(n=n)
        rng = np.random.default_rng(7)
        secret = protocol.AuthSecret(random_bits(rng, n), random_bits(rng, n // 2))
        x = random_bits(rng, n)
        transcript = protocol.run_session(cfg, secret, x, rng)
        check(f"honest session, n={n}", transcript.final == x and not transcript.aborted)

    return 0 if failures == 0 else FAILURE_EXIT


def dispatch(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return FAILURE_EXIT
    except SystemExit as exc:  # --help
        return int(exc.code or 0)

    handlers = {
        "run": _cmd_run,
        "verify-pqc": _cmd_verify_pqc,
        "attack": _cmd_attack,
        "view": _cmd_view,
        "selftest": _cmd_selftest,
    }
    try:
        return handlers[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return FAILURE_EXIT
    except ResourceLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return FAILURE_EXIT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return FAILURE_EXIT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return FAILURE_EXIT


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()

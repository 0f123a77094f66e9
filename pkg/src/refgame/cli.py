"""``refgame`` command line: run scenarios, batch them, audit transcripts."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional

from .agents import export_payoffs, payoff_summary
from .core import TranscriptFormatError, parse_transcript
from .games import get_game
from .ledger import LedgerError
from .protocols import ConfigError, RunReport, load_config, run_scenario
from .referee import audit_transcript

OK, PROTOCOL_FAILURE, USAGE = 0, 1, 2


def _fail(code: int, msg: str) -> int:
    print(f"refgame: {msg}", file=sys.stderr)
    return code


def _report_code(rep: RunReport) -> int:
    if not rep.conserved or rep.status == "unresolved" or not rep.budget.ok:
        return PROTOCOL_FAILURE
    return OK


def cmd_run(config: str, seed: Optional[int] = None, out: Optional[str] = None) -> int:
    cfg = load_config(config)
    rep = run_scenario(cfg, seed, base=Path(config).resolve().parent)
    dest = Path(out) if out else Path(f"{cfg.scenario}-seed{rep.seed}")
    rep.write(dest)
    sys.stdout.write(rep.render())
    return _report_code(rep)


def cmd_batch(config: str, runs: int, seed_base: int = 0, out: Optional[str] = None) -> int:
    if runs < 1:
        raise ConfigError("runs", "need at least one run")
    cfg = load_config(config)
    base = Path(config).resolve().parent
    records, code = [], OK
    for k in range(runs):
        rep = run_scenario(cfg, seed_base + k, base=base)
        records += rep.payoffs
        code = max(code, _report_code(rep))
    table = export_payoffs(payoff_summary(records))
    dest = Path(out) if out else Path(f"{cfg.scenario}-batch{seed_base}x{runs}.txt")
    dest.write_text(table)
    sys.stdout.write(table)
    return code


def cmd_verify(path: str) -> int:
    try:
        text = Path(path).read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise TranscriptFormatError(f"cannot read {path}: {exc}") from exc
    parsed = parse_transcript(text)
    game = get_game(parsed.transcript.spec.game_id)
    try:
        inst = game.loads(parsed.instance_text)
    except ValueError as exc:
        raise TranscriptFormatError(f"instance: {exc}") from exc
    audit = audit_transcript(parsed, inst)
    t = parsed.transcript
    print(f"verdict|{t.winner}|{t.reason}")
    for p in audit.problems:
        print(f"problem|{p}")
    if audit.unaudited:
        print(f"unaudited|{len(audit.unaudited)}|" + ",".join(f"{r}:{o}" for r, o in audit.unaudited))
    print(audit.status)
    return OK if audit.confirmed else PROTOCOL_FAILURE


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="refgame", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="run one scenario")
    r.add_argument("config")
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    b = sub.add_parser("batch", help="run seeded scenarios and tabulate payoffs")
    b.add_argument("config")
    b.add_argument("--runs", type=int, required=True)
    b.add_argument("--seed-base", type=int, default=0)
    b.add_argument("--out")
    v = sub.add_parser("verify", help="replay a transcript's referee checks")
    v.add_argument("transcript")
    return ap


def main(argv: Optional[list[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return USAGE if exc.code else OK
    try:
        if args.cmd == "run":
            return cmd_run(args.config, args.seed, args.out)
        if args.cmd == "batch":
            return cmd_batch(args.config, args.runs, args.seed_base, args.out)
        return cmd_verify(args.transcript)
    except ConfigError as exc:
        return _fail(USAGE, f"config error: {exc}")
    except TranscriptFormatError as exc:
        return _fail(USAGE, f"transcript format error: {exc}")
    except LedgerError as exc:
        return _fail(PROTOCOL_FAILURE, f"ledger: {exc}")


if __name__ == "__main__":
    sys.exit(main())

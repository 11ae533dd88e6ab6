"""Command line entry point: ``hjlb <command> --config FILE [--out DIR] [--override key=value]``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import harness
from .config import ConfigError, load_config

COMMANDS = {
    "solve": harness.cmd_solve,
    "chars": harness.cmd_chars,
    "bounds": harness.cmd_bounds,
    "convolve": harness.cmd_convolve,
    "herglotz": harness.cmd_herglotz,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hjlb", description="Gradient lower bounds for Hamilton-Jacobi equations.")
    ap.add_argument("command", choices=[*COMMANDS, "verify"])
    ap.add_argument("--config", required=True, help="TOML scenario file or bundled scenario name")
    ap.add_argument("--out", default=None, help="output directory")
    ap.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                    help="dotted key override, repeatable (e.g. verify.mode=scheme)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.override)
        out = Path(args.out or cfg.output.get("dir", f"hjlb-out/{cfg.name}"))
        if args.command == "verify":
            code, outcomes = harness.run_scenario(cfg, out)
            for o in outcomes:
                tag = "SKIP" if o.skipped else ("PASS" if o.passed else "FAIL")
                print(f"{tag} {o.name}: {o.detail}")
        else:
            out.mkdir(parents=True, exist_ok=True)
            code, lines = COMMANDS[args.command](cfg, out)
            for line in lines:
                print(line)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    print(f"{cfg.name}: {'ok' if code == 0 else 'FAILED'} (outputs in {out})")
    return code


if __name__ == "__main__":
    sys.exit(main())

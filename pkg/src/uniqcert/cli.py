"""``uniqcert <certify|solve|probe|study> --config PATH [--out PATH] ...``

Exit status: 0 on PASS / converged / unique, 2 on FAIL / distinct /
monitor-violation (or any other unsuccessful verdict), 1 on operational
errors such as an invalid config or unwritable output.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from .certify import certify
from .config import load_config
from .errors import ConfigError, UniqcertError
from .probe import UNIQUE, multistart
from .report import dumps, make_report, write_field_csv
from .solve import CONVERGED, gauss_newton_solve
from .study import convergence_study

COMMANDS = ("certify", "solve", "probe", "study")

log = logging.getLogger("uniqcert")


def exit_status(report: dict) -> int:
    """Exit code as a function of the report's verdicts only."""
    cmd = report["command"]
    if cmd == "certify":
        return 2 if report["certificate"]["overall"] == "FAIL" else 0
    if cmd == "study":
        return 0 if report["study"]["verdict"] == "converged" else 2
    # solve/probe sections are absent when a failed certificate blocked the run
    if cmd not in report:
        return 2
    success = CONVERGED if cmd == "solve" else UNIQUE
    return 0 if report[cmd]["verdict"] == success else 2


class _Timer:
    def __init__(self):
        self.ms = {}

    def __call__(self, name, fn, *args, **kwargs):
        t0 = time.perf_counter()
        out = fn(*args, **kwargs)
        self.ms[name] = round((time.perf_counter() - t0) * 1e3, 3)
        return out


def run(command: str, config, out=None, *, unsafe=False, fields_dir=None, timings=False):
    """Execute one command; returns ``(exit_status, report)`` and writes the
    canonical report to ``out`` when given."""
    if command not in COMMANDS:
        raise ValueError(f"unknown command {command!r}")
    timer = _Timer()
    sections = {}
    fields = {}
    if command == "study":
        sections["study"] = timer("study", convergence_study, config)
    else:
        problem = config.build()
        cert = timer("certify", certify, problem)
        sections["certificate"] = cert.to_dict()
        if command != "certify" and (cert.passed or unsafe):
            if command == "solve":
                rep = timer(
                    "solve", gauss_newton_solve, problem.A, problem.nf, problem.y, None,
                    config.solver, certificate=cert, unsafe=unsafe,
                )
                sections["solve"] = rep.to_dict()
                fields["u"] = rep.u
            else:
                rep = timer(
                    "probe", multistart, problem.A, problem.nf, problem.y,
                    config.probe_starts, config.probe_seed, config.probe_amplitude,
                    config.solver, certificate=cert, unsafe=unsafe,
                )
                sections["probe"] = rep.to_dict()
                if rep.solution is not None:
                    fields["u"] = rep.solution
    if timings:
        sections["timings_ms"] = timer.ms
    report = make_report(command, config.digest, **sections)
    if out is not None:
        Path(out).write_text(dumps(report))
    if fields_dir is not None:
        Path(fields_dir).mkdir(parents=True, exist_ok=True)
        for name, u in fields.items():
            write_field_csv(Path(fields_dir) / f"{name}.csv", u)
    return exit_status(report), report


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="uniqcert", description=__doc__.splitlines()[0].strip("`"))
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="problem configuration (JSON)")
    p.add_argument("--out", help="write the JSON report here (default: stdout)")
    p.add_argument("--seed", type=int, help="override probe.seed")
    p.add_argument("--unsafe", action="store_true", help="solve/probe even if the certificate fails")
    p.add_argument("--fields", metavar="DIR", help="write solution fields as CSV into DIR")
    p.add_argument("--timings", action="store_true", help="include wall-clock timings in the report")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        config = load_config(args.config)
        if args.seed is not None:
            config = config.with_seed(args.seed)
        status, report = run(
            args.command, config, args.out, unsafe=args.unsafe,
            fields_dir=args.fields, timings=args.timings,
        )
    except ConfigError as exc:
        for msg in exc.errors:
            print(f"uniqcert: config error: {msg}", file=sys.stderr)
        return 1
    except (UniqcertError, OSError, ValueError) as exc:
        print(f"uniqcert: error: {exc}", file=sys.stderr)
        return 1
    if args.out is None:
        sys.stdout.write(dumps(report))
    return status


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 physics-validity rejection,
4 numerical failure.
"""

import argparse
import logging
import sys
import time

from . import sweep
from .config import load_config, with_overrides
from .errors import GeholeError

log = logging.getLogger("gehole")


def _spectrum(spec):
    return [sweep.run_spectrum(spec)]


def _heatmap(spec):
    return list(sweep.run_heatmap(spec)[1])


def _residual(spec):
    return [sweep.run_residual_sweep(spec)[1]]


COMMANDS = {
    "spectrum": (_spectrum, "levels and qubit summary at the configured working point"),
    "heatmap": (_heatmap, "second-order shift over the (omega1, omega2) grid with its zero contour"),
    "r0-sweep": (lambda s: [sweep.run_r0_sweep(s)], "R0 against the auxiliary frequency for each gate field"),
    "residual-sweep": (_residual, "residual detuning with a charge defect against omega2"),
    "cancel-solve": (lambda s: [sweep.run_cancel_solve(s)], "cancellation amplitude and auxiliary frequencies"),
    "oracle-check": (lambda s: [sweep.run_oracle_check(s)], "time-evolution check of the perturbative shift"),
    "converge": (lambda s: [sweep.run_converge(s)], "omega0 along the basis-size ladder"),
}


def build_parser():
    p = argparse.ArgumentParser(prog="gehole", description="Germanium hole spin-qubit bichromatic drive simulator")
    p.add_argument("--config", default=None, help="key = value config file (defaults when omitted)")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--workers", type=int, default=None, help="process count for grid sweeps")
    p.add_argument("--seed", type=int, default=None, help="reserved; every computation is deterministic")
    p.add_argument("--no-stamp", action="store_true", help="skip the basis convergence stamp")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, text) in COMMANDS.items():
        sub.add_parser(name, help=text)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        spec = with_overrides(load_config(args.config), workers=args.workers, out=args.out)
        t0 = time.perf_counter()
        tables = COMMANDS[args.command][0](spec)
        stamp = None if args.no_stamp or args.command == "converge" else sweep.convergence_stamp(spec)
        paths = sweep.emit_outputs(tables, spec.run.out, spec, time.perf_counter() - t0, stamp)
    except GeholeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())

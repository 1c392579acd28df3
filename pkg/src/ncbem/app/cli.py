"""Command line interface: ``ncbem run <config.json> [flags]``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Optional, Sequence

from ..errors import NcbemError

log = logging.getLogger("ncbem")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ncbem", description="Galerkin single-layer BEM electrostatics solver")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a JSON problem configuration")
    r.add_argument("config", help="path to the problem configuration (JSON)")
    r.add_argument("--detect-interfaces", action="store_true",
                   help="detect interfaces between patch meshes (overrides the config)")
    r.add_argument("--elevate-order", type=int, metavar="P", help="elevate linear meshes to geometric order P")
    r.add_argument("--dry-run", action="store_true", help="build meshes, interfaces and skeleton only")
    r.add_argument("--dump-system", metavar="PATH", help="write rhs, diagonal and (dense) system matrix to an npz")
    r.add_argument("--threads", type=int, metavar="N", help="numba thread count")
    r.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format="%(levelname)s %(name)s: %(message)s")
    from .runner import run
    try:
        rep = run(args.config, detect=True if args.detect_interfaces else None, elevate=args.elevate_order,
                  dry_run=args.dry_run, dump_system=args.dump_system, threads=args.threads)
    except NcbemError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return 2
    summary = {"case": rep.case, "dims": rep.dims, "charges": rep.charges,
               "floating_potentials": rep.floating_potentials, "manifest": rep.manifest}
    if rep.dry_run:
        summary["interfaces"] = rep.interfaces
    print(json.dumps(summary, indent=2))
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

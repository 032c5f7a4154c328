"""Run every config in scripts/configs (or the ones given) and print a verdict table.

    python scripts/run_configs.py [--out DIR] [--jobs N] [config.json ...]
"""

import argparse
import sys
from pathlib import Path

from sdlab import cli
from sdlab.config import ConfigError, parse_config

HERE = Path(__file__).resolve().parent


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("configs", nargs="*", type=Path)
    p.add_argument("--out", default="sdlab-out")
    p.add_argument("--jobs", type=int, default=4)
    p.add_argument("--no-cache", action="store_true")
    args = p.parse_args(argv)
    paths = args.configs or sorted((HERE / "configs").glob("*.json"))
    worst = 0
    for path in paths:
        try:
            cfg = parse_config(path)
        except ConfigError as exc:
            print(f"{path.name:28s} CONFIG ERROR {exc}")
            worst = max(worst, cli.EXIT_CONFIG)
            continue
        record = cli.run(cfg, jobs=args.jobs, use_cache=not args.no_cache, out=args.out)
        cli.emit(record, args.out)
        status = "PASS" if record.passed else "FAIL"
        for v in record.verdicts:
            print(f"{path.name:28s} {v.status.upper():10s} {v.name}: {v.measured:.5g} "
                  f"(expected {v.expected:.5g}, tol {v.tolerance:g})")
        print(f"{path.name:28s} => {status}  [{args.out}/{record.digest}]")
        if not record.passed:
            worst = max(worst, cli.EXIT_FAIL)
    return worst


if __name__ == "__main__":
    sys.exit(main())

"""Run every config in scripts/configs (or the ones named) and summarise.

    python3 scripts/run_experiments.py --out results
    python3 scripts/run_experiments.py transport flow_contact
"""
import argparse
import sys
import time
from pathlib import Path

from heislab.cli import load_config, run

HERE = Path(__file__).parent / "configs"


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("names", nargs="*", help="config stems; default all")
    ap.add_argument("--out", default="results")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args(argv)
    paths = [HERE / f"{n}.yaml" for n in args.names] if args.names else sorted(HERE.glob("*.yaml"))
    failed = 0
    for path in paths:
        cfg = load_config(str(path), [f"threads={args.threads}"])
        start = time.perf_counter()
        rep = run(cfg, Path(args.out) / path.stem)
        status = "PASS" if rep.passed else "FAIL " + ",".join(rep.failures())
        verdict = f" {rep.verdict}" if rep.verdict else ""
        print(f"{path.stem:22s} {status}{verdict} ({time.perf_counter() - start:.1f}s)")
        failed += not rep.passed
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())

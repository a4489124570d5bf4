"""Grid learning curves: mean normalized reward per method and budget.

    python scripts/learning_curve.py [--config scripts/configs/grid.cfg] [--out curves.csv] [--set KEY=VALUE ...]
"""

import argparse
import csv
import io
import statistics
import sys
from collections import defaultdict
from contextlib import redirect_stdout
from pathlib import Path

from beltamp.harness.cli import main as cli

HERE = Path(__file__).parent


def run(config: str, extra: list) -> list:
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = cli(["learning-curve", "--config", config, "--reference", "--quiet", *extra])
    if code:
        sys.exit(code)
    return list(csv.DictReader(io.StringIO(buf.getvalue())))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=str(HERE / "configs" / "grid.cfg"))
    ap.add_argument("--out", help="also keep the raw per-seed rows here")
    args, extra = ap.parse_known_args(argv)  # anything else goes to the CLI
    rows = run(args.config, extra)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
    table = defaultdict(list)
    for r in rows:
        table[(r["method"], int(r["budget_used"]))].append(float(r["normalized_reward"]))
    print(f"{'method':<16}{'budget':>8}{'mean':>9}{'se':>8}")
    for (m, b), xs in sorted(table.items()):
        se = statistics.stdev(xs) / len(xs) ** 0.5 if len(xs) > 1 else 0.0
        print(f"{m:<16}{b:>8}{statistics.mean(xs):>9.3f}{se:>8.3f}")


if __name__ == "__main__":
    main()

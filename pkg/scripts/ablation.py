"""Method comparison on the hidden-object toy (or any config) with the summary table.

    python scripts/ablation.py [--config scripts/configs/hidden_object.cfg] [--out returns.csv]
"""

import argparse
import sys
from pathlib import Path

from beltamp.harness.cli import main as cli

HERE = Path(__file__).parent


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=str(HERE / "configs" / "hidden_object.cfg"))
    ap.add_argument("--out")
    ap.add_argument("--workers", default="1")
    args = ap.parse_args(argv)
    cmd = ["ablation", "--config", args.config, "--workers", args.workers]
    if args.out:
        cmd += ["--out", args.out]
    return cli(cmd)


if __name__ == "__main__":
    sys.exit(main())

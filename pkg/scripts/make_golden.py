"""Regenerate the reference data series and write them as CSV files.

    python scripts/make_golden.py               # refresh tests/golden/
    python scripts/make_golden.py --outdir out  # anywhere else

Each file carries its resolved configuration in the header, which is what the
golden regression test replays.
"""
from __future__ import annotations

import argparse
from pathlib import Path

from ssle_security.cli import run

SERIES: dict[str, list[str]] = {
    "gap_coefficient": ["gap-coefficient", "--alpha", "0.01:0.5:0.01"],
    "private_win": [
        "curve", "--source", "private", "--kinds", "ssle,ple", "--alpha", "0.1,0.25,0.33,0.49", "--n", "1:600",
    ],
    "grinding_win": ["curve", "--source", "grinding", "--kinds", "ssle,ple", "--alpha", "0.1,0.2,0.3", "--n", "1:400"],
    "grinding_vs_independent": [
        "curve", "--source", "grinding", "--kinds", "ssle,ple,ind", "--alpha", "0.1,0.2,0.3", "--n", "1:400",
    ],
    "fixed_length_win": ["curve", "--source", "fixed", "--kinds", "ssle,ple", "--alpha", "0.1,0.2,0.3", "--n", "1:400"],
}

GOLDEN_DIR = Path(__file__).resolve().parent.parent / "tests" / "golden"


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--outdir", type=Path, default=GOLDEN_DIR)
    args = p.parse_args()
    args.outdir.mkdir(parents=True, exist_ok=True)
    for name, argv in SERIES.items():
        status, text, _ = run(argv)
        if status:
            raise SystemExit(f"{name}: exit status {status}")
        path = args.outdir / f"{name}.csv"
        path.write_text(text)
        print(f"wrote {path} ({text.count(chr(10)) - 3} rows)")


if __name__ == "__main__":
    main()

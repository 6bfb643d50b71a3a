"""Write rate curves for all three theories to CSV files in an output directory."""

import argparse
import pathlib

from vrdist import cli


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="figure2_out")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--step", default="0.02")
    args = ap.parse_args()
    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for theory in ("coherence", "entanglement", "magic"):
        path = out / f"{theory}.csv"
        code = cli.main(["figure2", "--theory", theory, "--p-grid", f"0:{args.step}:1",
                         "--workers", str(args.workers), "--out", str(path)])
        print(f"{theory}: exit {code} -> {path}")


if __name__ == "__main__":
    main()

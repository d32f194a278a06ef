"""NOMA vs OMA outage sweep from a config file, printed as a compact table."""
import argparse
import csv
from pathlib import Path

from starris.cli import main as cli_main


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default="configs/outage_vs_snr.toml")
    ap.add_argument("--out", default=None, help="defaults to output.path of the config")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    argv = ["outage", "--config", args.config, "--workers", str(args.workers)]
    if args.out:
        argv += ["--out", args.out]
        out = args.out
    else:
        from starris.cli import load_config

        out = load_config(args.config).output["path"]
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    status = cli_main(argv)
    if status:
        raise SystemExit(status)

    rows = list(csv.DictReader(open(out, newline="")))
    grid = sorted({float(r["sweep_value"]) for r in rows})
    print("user variant             " + " ".join(f"{g:>7g}" for g in grid))
    for user in ("r", "t"):
        for variant in ("noma_perfect_sic", "noma_imperfect_sic", "oma"):
            vals = {float(r["sweep_value"]): float(r["p_hat"]) for r in rows if r["user"] == user and r["variant"] == variant}
            print(f"{user:4} {variant:19} " + " ".join(f"{vals[g]:7.4f}" for g in grid))


if __name__ == "__main__":
    main()

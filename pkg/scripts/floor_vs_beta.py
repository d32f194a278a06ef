"""Outage floors against the transmission amplitude, analytical and simulated.

For each array size the script prints the analytical floor (normal
approximation of the gain sums) and a noise-free Monte Carlo estimate of the
same event, for uniform profiles and for a 25% mode-switching profile.
The floor depends only on gain ratios, so unit-power links are used.
"""
import argparse
import csv
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from starris.access import UplinkScenario, high_snr_outage_event
from starris.analysis import FloorQuery, error_floor, floor_for_ms
from starris.channels import cascaded_stats, default_links, draw_realization
from starris.errors import ApproximationWarning
from starris.sim import OutageEstimate, count_events


def mc_floor(sc, trials, seed):
    def block(rng, n):
        out_r, _ = high_snr_outage_event(draw_realization(sc.links, sc.m_elements, rng, n), sc)
        return [int(np.count_nonzero(out_r))]

    return OutageEstimate.from_count(count_events(block, trials, seed)[0], trials)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--m", default="2,4,8,16,64")
    ap.add_argument("--trials", type=int, default=200_000)
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--out", default="results/floor_vs_beta.csv")
    args = ap.parse_args()
    warnings.simplefilter("ignore", ApproximationWarning)

    links = default_links()
    stats_r, stats_t = cascaded_stats(links.h, links.g_r, links.g_t)
    rows = []
    for m in (int(v) for v in args.m.split(",")):
        base = UplinkScenario(m_elements=m, links=links)
        for bt in (0.15, 0.2, 0.25):
            sc = base.with_beta_t(bt)
            analytic = error_floor(FloorQuery.from_scenario(sc))[0]
            est = mc_floor(sc, args.trials, args.seed)
            rows.append([m, f"uniform:{bt}", analytic, est.p_hat, est.ci_half_width])
        sc = replace(base, ms_fraction=0.25)
        analytic = floor_for_ms(0.25, m, stats_r, stats_t, sc.gamma_r)[0]
        est = mc_floor(sc, args.trials, args.seed)
        rows.append([m, "ms:0.25", analytic, est.p_hat, est.ci_half_width])

    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(["m", "profile", "floor_analytic", "floor_mc", "ci"])
        w.writerows([[m, p, repr(a), repr(b), repr(c)] for m, p, a, b, c in rows])
    for m, p, a, b, c in rows:
        print(f"M={m:3d} {p:13s} analytic={a:.3e} mc={b:.3e} +/- {c:.1e}")


if __name__ == "__main__":
    main()

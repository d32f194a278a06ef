"""KL divergence of the Gaussian fit to the exact M-fold cascaded-sum density."""
import argparse

from starris.channels import RicianLink, kl_gaussian_approx
from starris.config import db_to_linear


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--k-db", type=float, default=1.3)
    ap.add_argument("--omega", type=float, default=1.0)
    ap.add_argument("--m", default="5,10,15,20,25")
    args = ap.parse_args()
    link = RicianLink(float(db_to_linear(args.k_db)), args.omega)
    print("M   D_KL")
    for m in (int(v) for v in args.m.split(",")):
        print(f"{m:<3d} {kl_gaussian_approx(m, link, link):.4e}")


if __name__ == "__main__":
    main()

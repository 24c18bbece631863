"""Binomial keyword enrichment for selections of 500 variables on a 12487-variable chip."""
import argparse

from expca.stats.enrichment import binomial_tail

ROWS = [("cholesterol biosynthetic process", 33, 10), ("sterol biosynthetic process", 42, 10),
        ("steroid biosynthetic process", 62, 12), ("isoprenoid biosynthetic process", 16, 5),
        ("G1/S transition of mitotic cell cycle", 35, 7)]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--chip", type=int, default=12487)
    ap.add_argument("--selected", type=int, default=500)
    args = ap.parse_args()
    print("keyword\tchip\tselected\tp-value")
    for kw, chip, hit in ROWS:
        print(f"{kw}\t{chip}\t{hit}\t{binomial_tail(args.selected, chip / args.chip, hit):.3g}")


if __name__ == "__main__":
    main()

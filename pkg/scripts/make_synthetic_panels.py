"""Generate a synthetic caplet quote panel from a known parameter set.

Prices every expiry on a forward-relative strike grid with the Fourier
pricer and writes them in the panel CSV format the `svlibor calibrate`
subcommand reads, so a round trip should recover the generating parameters.

    python3 scripts/make_synthetic_panels.py --out panels.csv
    svlibor calibrate --curve fixtures/curve_table.csv \\
        --model fixtures/model_table.json --panels panels.csv
"""

import argparse
import csv
import pathlib
import sys

import numpy as np

from svlibor.fourier import caplet_price
from svlibor.market_data import load_curve, strip_libors
from svlibor.model import build_factorization, load_params

FIXTURES = pathlib.Path(__file__).resolve().parents[1] / "fixtures"


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--curve", default=str(FIXTURES / "curve_table.csv"))
    ap.add_argument("--model", default=str(FIXTURES / "model_table.json"))
    ap.add_argument("--moneyness", default="0.6,0.7667,0.9333,1.1,1.2667,1.4333,1.6",
                    help="strike grid as multiples of the forward")
    ap.add_argument("--out", required=True)
    args = ap.parse_args(argv)

    tenor, curve = load_curve(args.curve)
    params = load_params(args.model)
    fact = build_factorization(params, tenor)
    libors = strip_libors(curve, tenor)
    grid = np.array([float(tok) for tok in args.moneyness.split(",")])

    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["expiry_index", "strike", "quote", "quote_kind"])
        for j in range(1, tenor.n):
            strikes = libors[j] * grid
            prices = caplet_price(j, strikes, tenor, curve, params, fact,
                                  libors=libors)
            for k, price in zip(strikes, prices):
                writer.writerow([j, f"{k:.17g}", f"{price:.17g}", "price"])
    print(f"wrote {(tenor.n - 1) * grid.size} quotes to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

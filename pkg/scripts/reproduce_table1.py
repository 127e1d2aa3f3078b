#!/usr/bin/env python3
"""Large-ensemble classical-model visibilities for the benchmark sets.

Reproduces the published large-N reference visibilities (lower bounds that
improve monotonically with the ensemble size). At the full ensemble sizes the
d = 5 and d = 7 rows build LPs with ~10^7-10^8 nonzeros and need several GB
and tens of minutes; this is a batch script, not part of the test suite.

Usage:
    python scripts/reproduce_table1.py            # desk-scale ensembles
    python scripts/reproduce_table1.py --full     # published ensemble sizes
    python scripts/reproduce_table1.py --rows 2mub2 3mub2 --n-lambda 5000
"""

import argparse
import sys
import time

from classim import measurements as ms
from classim.models import default_ensemble, search_classical_model
from classim.rng import substream

ROWS = {
    # name: (set builder, full N, desk N, reference visibility)
    "2sic5": (ms.sic_five_tetrahedra, 20000, 2000, 0.7605),
    "2mub2": (lambda: ms.mub_set(2, 2), 10000, 2000, 0.7071),
    "2mub3": (lambda: ms.mub_set(2, 3), 10000, 2000, 0.5774),
    "3mub2": (lambda: ms.mub_set(3, 2), 20000, 1000, 0.6457),
    "5mub2": (lambda: ms.mub_set(5, 2), 20000, 300, 0.4614),
    "7mub2": (lambda: ms.mub_set(7, 2), 20000, 150, 0.3488),
    "7mub8": (lambda: ms.mub_set(7, 8), 3000, 60, 0.2705),
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rows", nargs="*", choices=sorted(ROWS), default=sorted(ROWS))
    parser.add_argument("--full", action="store_true", help="published ensemble sizes")
    parser.add_argument("--n-lambda", type=int, help="override the ensemble size")
    parser.add_argument("--seed", type=int, default=2024)
    args = parser.parse_args(argv)

    print(f"{'row':>6} {'N':>6} {'v* (lower bound)':>17} {'reference':>10} {'time':>8}")
    for name in args.rows:
        builder, full_n, desk_n, reference = ROWS[name]
        n_lambda = args.n_lambda or (full_n if args.full else desk_n)
        mset = builder()
        rng = substream(args.seed, f"ensemble-{name}")
        ensemble = default_ensemble(mset, n_lambda, rng)
        t0 = time.time()
        v, _ = search_classical_model(mset, ensemble, max_nonzeros=500_000_000)
        print(
            f"{name:>6} {n_lambda:>6} {v:>17.6f} {reference:>10.4f} "
            f"{time.time() - t0:>7.1f}s"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())

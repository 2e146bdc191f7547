#!/usr/bin/env python3
"""Manual benchmark harness for publicly available labeled datasets.

This intentionally stays out of the automated test suite: the datasets
must be downloaded by hand and a faithful run takes hours.  Given a
numeric CSV and a matching label file, it runs the full default grid and
reports the adjusted Rand index of the selected model's clustering.

Reference ballpark (full grids, Kmax=20, nChains=4, mCycles=1100,
burnCycles=100): coffee (n=43, p=12, K=2) ARI 1.0; a 1500-point wave
subset (p=21, K=3) ARI about 0.6; wine (n=178, p=27, K=3) ARI about 0.8;
the standardized 5-phase yeast cell-cycle subset (n=384, p=17, K=5)
ARI about 0.5 with q up to 10.

Example:
    python scripts/real_data_check.py --data wine.csv --labels wine_labels.csv \
        --q 1:5 --m-cycles 1100 --burn-cycles 100 --parallel-models 4
"""

import argparse
import sys

from mfaclust import api, io
from mfaclust.cli import parse_models, parse_q_values
from mfaclust.sampler import RunSchedule
from mfaclust.simulate import adjusted_rand_index
from mfaclust.types import PARAMETERIZATIONS, PriorConfig


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--data", required=True)
    parser.add_argument("--labels", required=True)
    parser.add_argument("--models", default=",".join(PARAMETERIZATIONS))
    parser.add_argument("--q", default="1:5")
    parser.add_argument("--kmax", type=int, default=20)
    parser.add_argument("--n-chains", type=int, default=4)
    parser.add_argument("--m-cycles", type=int, default=1100)
    parser.add_argument("--burn-cycles", type=int, default=100)
    parser.add_argument("--warm-up", type=int, default=5000)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--parallel-models", type=int, default=1)
    args = parser.parse_args()

    data = io.ingest_csv(args.data)
    truth = io.read_labels(args.labels)
    prior = PriorConfig(kmax=args.kmax, n_chains=args.n_chains)
    schedule = RunSchedule(m_cycles=args.m_cycles, burn_cycles=args.burn_cycles,
                           warm_up=args.warm_up)
    report = api.fit(data, q_values=parse_q_values(args.q),
                     models=parse_models(args.models), prior=prior,
                     schedule=schedule, seed=args.seed,
                     parallel_models=args.parallel_models)
    print(api.print_table(report))
    ari = adjusted_rand_index(report.class_labels, truth)
    print(f"\nARI against the provided labels: {ari:.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

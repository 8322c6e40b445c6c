"""Compare every analytic evaluator with the simulator on a parameter grid.

Prints one line per (evaluator, N, W, R, lambda, xi, t) with the analytic
value, the simulated estimate and the gap in binomial standard errors.
Lines beyond --sigmas are flagged.

    python scripts/validate_against_simulation.py --n 3 5 --trials 2000000
"""

import argparse
import math

from quorum_staleness import DelayModel, QuorumSpec
from quorum_staleness.errors import UnsupportedMethodError
from quorum_staleness.sim import SimConfig, estimate_pt_batch
from quorum_staleness.staleness import analytic_general_pt, closed_form_pt, exact_pt

EVALUATORS = {"closed": closed_form_pt, "general": analytic_general_pt, "exact": exact_pt}


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--n", type=int, nargs="+", default=[3, 5])
    ap.add_argument("--rates", type=float, nargs="+", default=[0.25, 1.0, 4.0])
    ap.add_argument("--times", type=float, nargs="+", default=[0.0, 0.5, 1.0, 2.0])
    ap.add_argument("--max-r", type=int, default=3)
    ap.add_argument("--trials", type=int, default=1_000_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--sigmas", type=float, default=4.0)
    args = ap.parse_args()

    flagged = total = 0
    for n in args.n:
        keys = [(w, r, lam, xi, t)
                for w in range(1, n + 1) for r in range(1, min(n, args.max_r) + 1) if w + r <= n
                for lam in args.rates for xi in args.rates for t in args.times]
        sims = estimate_pt_batch(
            SimConfig(QuorumSpec(n, w, r), DelayModel(lam, xi), t, args.trials, args.seed)
            for w, r, lam, xi, t in keys
        )
        for (w, r, lam, xi, t), sim in zip(keys, sims):
            for name, fn in EVALUATORS.items():
                try:
                    p = fn(QuorumSpec(n, w, r), DelayModel(lam, xi), t).probability
                except UnsupportedMethodError:
                    continue
                se = math.sqrt(max(p * (1 - p), 1e-300) / args.trials)
                z = (sim.estimate - p) / se
                bad = abs(z) > args.sigmas
                flagged += bad
                total += 1
                print(f"{'!!' if bad else '  '} {name:8s} N={n} W={w} R={r} lam={lam:<5g} xi={xi:<5g} "
                      f"t={t:<4g} analytic={p:.6f} sim={sim.estimate:.6f} z={z:+.1f}")
    print(f"{flagged}/{total} comparisons beyond {args.sigmas} sigma")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Desk-scale simulation study: replicate recovery metrics per scenario.

Runs simulate-fit-score replicates for both scenarios at a few sample
sizes and prints one table row per setting (CSR, TPR, FDR, MCC). Scale
everything up with the flags below to approach the full study.

Example:
    python scripts/run_simulation_study.py --replicates 10 \
        --iterations 20000 --burn-in 12000 --n 2000 5000
"""

import argparse
import json
import time
from pathlib import Path

from latentcycles import (
    ChainConfig,
    Hyperparameters,
    MoveConfig,
    run_replicates,
    scenario_parameters,
)
from latentcycles.cli import _format_table, _report_payload


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--scenarios", nargs="+", default=["I", "II"],
                        choices=["I", "II"])
    parser.add_argument("--n", nargs="+", type=int, default=[2000, 5000])
    parser.add_argument("--replicates", type=int, default=10)
    parser.add_argument("--iterations", type=int, default=20_000)
    parser.add_argument("--burn-in", dest="burn_in", type=int, default=12_000)
    parser.add_argument("--thin", type=int, default=10)
    parser.add_argument("--seed", type=int, default=20260824)
    parser.add_argument("--out", default="study_out")
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    chain_cfg = ChainConfig(iterations=args.iterations,
                            burn_in=args.burn_in, thin=args.thin)
    rows = []
    for scenario in args.scenarios:
        params = scenario_parameters(scenario)
        hyper = Hyperparameters.default(params.Q)
        for n in args.n:
            t0 = time.monotonic()
            result = run_replicates(
                params, n, args.replicates, seed=args.seed,
                hyper=hyper, chain_cfg=chain_cfg, move_cfg=MoveConfig(),
            )
            payload = _report_payload(result, scenario, n)
            payload["elapsed_seconds"] = round(time.monotonic() - t0, 1)
            bias, mse = result.a_bias_mse(params.A)
            payload["a_max_abs_bias"] = float(abs(bias).max())
            payload["a_max_mse"] = float(mse.max())
            rows.append(payload)
            print(_format_table(payload))
            print(f"  max |bias(A)| {payload['a_max_abs_bias']:.4f}  "
                  f"max MSE(A) {payload['a_max_mse']:.2e}  "
                  f"elapsed {payload['elapsed_seconds']}s\n", flush=True)

    with open(out / "study.json", "w", encoding="utf-8") as fh:
        json.dump(rows, fh, indent=2, sort_keys=True)
    print(f"full results in {out / 'study.json'}")


if __name__ == "__main__":
    main()

"""Command-line interface: simulate, fit, replicate, score.

Exit codes: 0 success, 2 validation or configuration error, 3 numerical
failure inside a chain.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .config import ConfigError, load_config
from .io_utils import (
    read_dataset_csv,
    read_json,
    read_support_json,
    write_dataset_csv,
    write_json,
    write_manifest,
    write_samples_ndjson,
    write_truth_json,
)
from .metrics import run_replicates, score_graph
from .model import (
    CausalParameters,
    GroundTruthGraph,
    StabilityError,
    ValidationError,
    generate_data,
    scenario_parameters,
)
from .sampler import ChainError, diagnostics, extract_graph, run_chain, summarize


def _load_params(args) -> CausalParameters:
    if args.scenario:
        return scenario_parameters(args.scenario)
    raw = read_json(args.params)
    params = CausalParameters(
        mu=np.asarray(raw["mu"]), A=np.asarray(raw["A"]),
        B=np.asarray(raw["B"]), L=np.asarray(raw["L"]),
        sigma2=np.asarray(raw["sigma2"]),
    )
    params.validate()
    return params


def _apply_overrides(chain_cfg, args) -> None:
    for flag, attr in (("iterations", "iterations"), ("burn_in", "burn_in"),
                       ("thin", "thin")):
        value = getattr(args, flag, None)
        if value is not None:
            setattr(chain_cfg, attr, value)
    chain_cfg.validate()


def cmd_simulate(args) -> int:
    t0 = time.monotonic()
    params = _load_params(args)
    rng = np.random.default_rng(np.random.SeedSequence(args.seed))
    data, truth = generate_data(params, args.n, rng=rng)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_dataset_csv(out / "data.csv", data)
    write_truth_json(out / "truth.json", truth, params)
    write_manifest(
        out / "manifest.json", "simulate",
        {"scenario": args.scenario, "params": args.params, "n": args.n},
        args.seed, ["data.csv", "truth.json"], time.monotonic() - t0,
    )
    print(f"wrote data.csv ({data.n} x {data.Q} responses, {data.S} covariates)")
    return 0


def cmd_fit(args) -> int:
    t0 = time.monotonic()
    data = read_dataset_csv(args.data)
    hyper, move_cfg, chain_cfg = load_config(args.config, data.Q)
    _apply_overrides(chain_cfg, args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    children = np.random.SeedSequence(args.seed).spawn(args.chains)
    results = []
    for ss in children:
        results.append(run_chain(data, hyper, chain_cfg, move_cfg,
                                 np.random.default_rng(ss)))
    samples = [s for r in results for s in r.samples]
    summary = summarize(samples)
    graph = extract_graph(summary, args.threshold)
    write_samples_ndjson(out / "samples.ndjson", samples)
    write_json(out / "summary.json", summary)
    write_json(out / "graph.json", {
        "b_edges": graph["b_support"],
        "a_edges": graph["a_support"],
        "l_edges": graph["l_support"],
        "p_star": graph["p_star"],
        "b_estimate": graph["b_estimate"],
        "a_estimate": graph["a_estimate"],
    })
    write_json(out / "diagnostics.json", diagnostics(results))
    write_manifest(
        out / "manifest.json", "fit",
        {"hyper": asdict(hyper), "moves": asdict(move_cfg),
         "chain": asdict(chain_cfg), "chains": args.chains,
         "threshold": args.threshold, "data": str(args.data)},
        args.seed,
        ["samples.ndjson", "summary.json", "graph.json", "diagnostics.json"],
        time.monotonic() - t0,
    )
    print(f"retained {len(samples)} samples; modal confounder count "
          f"{summary.p_star_mode}")
    return 0


def _report_payload(result, scenario: str, n: int) -> dict:
    tp = sum(r.tp for r in result.reports)
    fp = sum(r.fp for r in result.reports)
    fn = sum(r.fn for r in result.reports)
    tn = sum(r.tn for r in result.reports)
    denom = np.sqrt(float(tp + fp) * (tp + fn) * (tn + fp) * (tn + fn))
    pooled_mcc = (tp * tn - fp * fn) / denom if denom > 0 else 0.0
    return {
        "scenario": scenario,
        "n": n,
        "replicates": len(result.reports),
        "failures": result.failures,
        "csr": result.csr,
        "mean_tpr": float(np.mean([r.tpr for r in result.reports])) if result.reports else 0.0,
        "mean_fdr": float(np.mean([r.fdr for r in result.reports])) if result.reports else 0.0,
        "mean_mcc": result.mean_mcc,
        "pooled_tpr": tp / (tp + fn) if tp + fn else 0.0,
        "pooled_fdr": fp / (tp + fp) if tp + fp else 0.0,
        "pooled_mcc": float(pooled_mcc),
        "per_replicate": [asdict(r) for r in result.reports],
    }


def _format_table(payload: dict) -> str:
    head = f"{'scenario':<10}{'n':>8}{'reps':>6}{'CSR':>6}{'TPR':>8}{'FDR':>8}{'MCC':>8}"
    row = (f"{payload['scenario']:<10}{payload['n']:>8}"
           f"{payload['replicates']:>6}{payload['csr']:>6}"
           f"{payload['mean_tpr']:>8.2f}{payload['mean_fdr']:>8.2f}"
           f"{payload['mean_mcc']:>8.2f}")
    return head + "\n" + row


def cmd_replicate(args) -> int:
    t0 = time.monotonic()
    params = scenario_parameters(args.scenario)
    hyper, move_cfg, chain_cfg = load_config(args.config, params.Q)
    _apply_overrides(chain_cfg, args)
    result = run_replicates(
        params, args.n, args.replicates, args.seed,
        hyper=hyper, chain_cfg=chain_cfg, move_cfg=move_cfg,
        threshold=args.threshold,
    )
    payload = _report_payload(result, args.scenario, args.n)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "report.json", payload)
    table = _format_table(payload)
    (out / "report.txt").write_text(table + "\n", encoding="utf-8")
    write_manifest(
        out / "manifest.json", "replicate",
        {"scenario": args.scenario, "n": args.n,
         "replicates": args.replicates, "threshold": args.threshold,
         "hyper": asdict(hyper), "moves": asdict(move_cfg),
         "chain": asdict(chain_cfg)},
        args.seed, ["report.json", "report.txt"], time.monotonic() - t0,
    )
    print(table)
    return 0


def cmd_score(args) -> int:
    est = read_support_json(args.estimate)
    truth_raw = read_support_json(args.truth)
    if est["b_support"].shape != truth_raw["b_support"].shape:
        raise ValidationError(
            f"dimension mismatch: estimate {est['b_support'].shape} "
            f"vs truth {truth_raw['b_support'].shape}"
        )
    Q = truth_raw["b_support"].shape[0]
    truth = GroundTruthGraph(
        b_support=truth_raw["b_support"],
        a_support=truth_raw.get("a_support", np.zeros((Q, 0), dtype=bool)),
        l_support=truth_raw.get("l_support", np.zeros((Q, 0), dtype=bool)),
        p_star=truth_raw.get("p_star",
                             truth_raw.get("l_support", np.zeros((Q, 0))).shape[1]),
    )
    estimate = {
        "b_support": est["b_support"],
        "l_support": est.get("l_support", np.zeros((Q, 0), dtype=bool)),
        "p_star": est.get("p_star", 0),
    }
    report = score_graph(estimate, truth)
    print(f"TPR {report.tpr:.4f}  FDR {report.fdr:.4f}  MCC {report.mcc:.4f}  "
          f"exact {'yes' if report.exact_b else 'no'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latentcycles",
        description="Bayesian discovery of cyclic causal graphs with latent confounders",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw a dataset from a known model")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--scenario", choices=["I", "II"])
    g.add_argument("--params", help="JSON file with mu, A, B, L, sigma2")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="run the sampler on a CSV dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--burn-in", dest="burn_in", type=int, default=None)
    p.add_argument("--thin", type=int, default=None)
    p.add_argument("--chains", type=int, default=1)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("replicate", help="simulate-fit-score replicates")
    p.add_argument("--scenario", choices=["I", "II"], required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--replicates", type=int, default=10)
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--burn-in", dest="burn_in", type=int, default=None)
    p.add_argument("--thin", type=int, default=None)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_replicate)

    p = sub.add_parser("score", help="compare an estimated graph to a truth file")
    p.add_argument("--estimate", required=True)
    p.add_argument("--truth", required=True)
    p.set_defaults(func=cmd_score)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, StabilityError, ConfigError, ValueError,
            FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ChainError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

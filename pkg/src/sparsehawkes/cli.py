"""Command-line front end: simulate / fit / train / predict / benchmark."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .classify import ErmConfig, error_rate, train_ermlr
from .harness import BenchmarkConfig, emit_report, run_benchmark
from .kernels import ExponentialKernel
from .lasso import LassoConfig, fit_all_classes
from .model import LabeledSample
from .serialize import (read_dataset, read_model, read_params, write_dataset,
                        write_fit, write_model)
from .simulate import (MixtureSpec, ScenarioSpec, expected_counts, make_scenario,
                       sample_dataset, spectral_radius)


def _cmd_simulate(args) -> int:
    kernel = ExponentialKernel(beta=args.beta)
    if args.params:
        params = read_params(args.params)
        mix = MixtureSpec(class_weights=np.array([1.0]), params=(params,), kernel=kernel,
                          T=args.T)
        report = {
            "params_file": args.params,
            "M": params.M,
            "frobenius": float(np.linalg.norm(params.A)),
            "spectral_radius": spectral_radius(params.A),
            "expected_events_per_path": float(expected_counts(params, kernel, args.T).sum()),
        }
    else:
        if args.scenario not in (1, 2):
            raise SystemExit("--scenario must be 1 or 2 (or use --params)")
        spec = ScenarioSpec(name=f"scenario{args.scenario}", M=args.M, K=args.K,
                            baseline=args.baseline, T=args.T, beta=args.beta, seed=args.seed)
        mix = make_scenario(spec)
        report = mix.structure_report
    samples = sample_dataset(mix, args.n, args.seed)
    write_dataset(samples, args.out)
    print(json.dumps(report, indent=2))
    return 0


def _require_labels(dataset, where: str):
    if not all(isinstance(s, LabeledSample) for s in dataset):
        raise SystemExit(f"{where} requires a labeled dataset")


def _cmd_fit(args) -> int:
    dataset = read_dataset(args.data)
    _require_labels(dataset, "fit")
    kernel = ExponentialKernel(beta=args.beta)
    config = LassoConfig(grid_size=args.grid, ebic_gamma=args.ebic_gamma,
                         grid_decades=args.decades, nonnegative=args.nonnegative)
    K = max(s.label for s in dataset)
    fit = fit_all_classes(dataset, K, kernel, config, kappa_fixed=args.kappa_fixed)
    write_fit(fit, args.beta, args.out)
    if args.dump_stats:
        from .suffstats import aggregate, compute_suff_stats
        dump = {}
        for k in range(1, K + 1):
            stats = [compute_suff_stats(s.path, kernel) for s in dataset if s.label == k]
            cs = aggregate(stats, M=dataset[0].path.M)
            dump[str(k)] = {"n_k": cs.n_k, "G_bar": cs.G_bar.tolist(), "b_bar": cs.b_bar.tolist()}
        with open(args.dump_stats, "w") as fh:
            json.dump(dump, fh)
    print(json.dumps({"classes": [{"kappa_hat": f.kappa_hat, "support_size": len(f.support),
                                   "n_k": f.n_k} for f in fit.classes]}, indent=2))
    return 0


def _cmd_train(args) -> int:
    dataset = read_dataset(args.data)
    _require_labels(dataset, "train")
    kernel = ExponentialKernel(beta=args.beta)
    lasso_config = LassoConfig(ebic_gamma=args.ebic_gamma)
    result = train_ermlr(dataset, lasso_config, ErmConfig(), split_mode=args.split,
                         kernel=kernel)
    model = result.ermlr if args.mode == "ermlr" else result.pi
    write_model(model, args.out)
    print(json.dumps({"mode": args.mode, "p_hat": result.p_hat.tolist(),
                      "initial_risk": result.initial_risk, "final_risk": result.final_risk}))
    return 0


def _cmd_predict(args) -> int:
    model = read_model(args.model)
    dataset = read_dataset(args.data)
    from .classify import predict_batch
    paths = [s.path if isinstance(s, LabeledSample) else s for s in dataset]
    pred = predict_batch(model, paths)
    with open(args.out, "w") as fh:
        fh.write("sample,label\n")
        for i, lab in enumerate(pred):
            fh.write(f"{i},{int(lab)}\n")
    if all(isinstance(s, LabeledSample) for s in dataset) and dataset:
        err = error_rate(model, dataset)
        print(json.dumps({"n": len(dataset), "error_rate": err}))
    else:
        print(json.dumps({"n": len(dataset)}))
    return 0


def _cmd_benchmark(args) -> int:
    with open(args.config) as fh:
        raw = json.load(fh)
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.threads is not None:
        raw["threads"] = args.threads
    raw.pop("out_dir", None)
    config = BenchmarkConfig.from_dict(raw)
    rows = run_benchmark(config)
    files = emit_report(rows, args.out_dir)
    failures = [r for r in rows if r.failed]
    print(json.dumps({"rows": len(rows), "failures": len(failures), "files": files}, indent=2))
    for r in failures:
        print(f"failed: M={r.M} n={r.n} rep={r.repetition}: {r.error}", file=sys.stderr)
    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparsehawkes",
                                     description="Sparse Hawkes path classification toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a labeled dataset")
    p.add_argument("--scenario", type=int, choices=(1, 2), default=None)
    p.add_argument("--M", type=int, default=10)
    p.add_argument("--K", type=int, default=3)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--T", type=float, default=5.0)
    p.add_argument("--beta", type=float, default=3.0)
    p.add_argument("--baseline", type=float, default=0.4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--params", type=str, default=None,
                   help="params JSON file; bypasses the scenario generator")
    p.add_argument("--out", type=str, required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("fit", help="per-class Lasso fit with EBIC calibration")
    p.add_argument("--data", type=str, required=True)
    p.add_argument("--beta", type=float, default=3.0)
    p.add_argument("--ebic-gamma", type=float, default=1.0)
    p.add_argument("--grid", type=int, default=40)
    p.add_argument("--decades", type=float, default=3.0)
    p.add_argument("--kappa-fixed", type=float, default=None)
    p.add_argument("--nonnegative", action="store_true")
    p.add_argument("--dump-stats", type=str, default=None)
    p.add_argument("--out", type=str, required=True)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("train", help="train a classifier (ermlr or plug-in)")
    p.add_argument("--data", type=str, required=True)
    p.add_argument("--beta", type=float, default=3.0)
    p.add_argument("--ebic-gamma", type=float, default=1.0)
    p.add_argument("--mode", choices=("ermlr", "pi"), default="ermlr")
    p.add_argument("--split", choices=("none", "half"), default="none")
    p.add_argument("--out", type=str, required=True)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="predict labels with a trained model")
    p.add_argument("--model", type=str, required=True)
    p.add_argument("--data", type=str, required=True)
    p.add_argument("--out", type=str, required=True)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("benchmark", help="Monte-Carlo benchmark from a JSON config")
    p.add_argument("--config", type=str, required=True)
    p.add_argument("--out-dir", type=str, required=True)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_benchmark)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

"""Monte-Carlo benchmark: simulate, fit, classify, report.

Every repetition owns a Philox substream keyed by (scenario, M, n, rep), so
the emitted metrics are a pure function of the configuration regardless of
execution order or thread count. Wall-clock columns are machine-dependent and
therefore land in timings.csv, keeping metrics.csv byte-reproducible.
"""

from __future__ import annotations

import json
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path as FsPath

import numpy as np

from .classify import ErmConfig, ClassifierModel, error_rate, prepare_features, train_ermlr
from .lasso import LassoConfig
from .simulate import ScenarioSpec, make_scenario, sample_dataset

METRICS_HEADER = ("scenario", "M", "n", "repetition", "d_hamming", "d_l2",
                  "err_bayes", "err_oes", "err_pi", "err_ermlr", "events_total")
TIMINGS_HEADER = ("scenario", "M", "n", "repetition", "wall_time_lasso", "wall_time_erm")
_SUMMARY_METRICS = ("d_hamming", "d_l2", "err_bayes", "err_oes", "err_pi", "err_ermlr")


def hamming_distance(A_true: np.ndarray, A_hat: np.ndarray) -> float:
    """Fraction of adjacency positions whose active/inactive status differs.

    The comparison is on the support pattern (zero vs nonzero), not on float
    values: value equality of continuous estimates is measure-zero.
    """
    A_true = np.asarray(A_true)
    A_hat = np.asarray(A_hat)
    if A_true.shape != A_hat.shape:
        raise ValueError("shape mismatch")
    return float(np.mean((A_true == 0) != (A_hat == 0)))


def l2_distance(A_true: np.ndarray, A_hat: np.ndarray) -> float:
    """Entrywise Frobenius distance sqrt(sum (A* - A_hat)^2)."""
    A_true = np.asarray(A_true, dtype=float)
    A_hat = np.asarray(A_hat, dtype=float)
    if A_true.shape != A_hat.shape:
        raise ValueError("shape mismatch")
    return float(np.sqrt(np.sum((A_true - A_hat) ** 2)))


@dataclass(frozen=True)
class BenchmarkConfig:
    scenario: str = "scenario1"
    Ms: tuple = (10,)
    n_trains: tuple = (300, 600, 1500)
    n_test: int = 3000
    repetitions: int = 30
    T: float = 5.0
    beta: float = 3.0
    K: int = 3
    baseline: float = 0.4
    seed: int = 0
    lasso: LassoConfig = field(default_factory=LassoConfig)
    erm: ErmConfig = field(default_factory=ErmConfig)
    threads: int = 1

    def __post_init__(self) -> None:
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")
        if self.n_test < 1:
            raise ValueError("n_test must be at least 1")

    @classmethod
    def from_dict(cls, d: dict) -> "BenchmarkConfig":
        d = dict(d)
        if "lasso" in d and isinstance(d["lasso"], dict):
            d["lasso"] = LassoConfig(**d["lasso"])
        if "erm" in d and isinstance(d["erm"], dict):
            d["erm"] = ErmConfig(**d["erm"])
        for key in ("Ms", "n_trains"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


@dataclass(eq=False)
class MetricsRow:
    scenario: str
    M: int
    n: int
    repetition: int
    d_hamming: float
    d_l2: float
    err_bayes: float
    err_oes: float
    err_pi: float
    err_ermlr: float
    events_total: int
    wall_time_lasso: float
    wall_time_erm: float
    failed: bool = False
    error: str = ""


def _scenario_id(name: str) -> int:
    return 1 if name == "scenario1" else 2


def _run_one(config: BenchmarkConfig, mix, M: int, n: int, rep: int) -> MetricsRow:
    sid = _scenario_id(config.scenario)
    train_stream = np.random.SeedSequence(entropy=config.seed, spawn_key=(sid, M, n, rep, 0))
    test_stream = np.random.SeedSequence(entropy=config.seed, spawn_key=(sid, M, n, rep, 1))
    train = sample_dataset(mix, n, train_stream)
    test = sample_dataset(mix, config.n_test, test_stream)
    events_total = int(sum(s.path.n_events for s in train))

    result = train_ermlr(train, config.lasso, config.erm, kernel=mix.kernel,
                         K=mix.K, true_params=mix.params)

    d_h = hamming_distance(mix.params[0].A, result.lasso[0].theta_hat.A)
    d_l2 = l2_distance(mix.params[0].A, result.lasso[0].theta_hat.A)

    bayes = ClassifierModel(p_hat=mix.class_weights, params=mix.params,
                            kernel=mix.kernel, variant="bayes")
    test_feat = prepare_features(test, mix.kernel)
    errs = {}
    for tag, model in (("bayes", bayes), ("oes", result.oes), ("pi", result.pi),
                       ("ermlr", result.ermlr)):
        errs[tag] = error_rate(model, test_feat)

    return MetricsRow(scenario=config.scenario, M=M, n=n, repetition=rep,
                      d_hamming=d_h, d_l2=d_l2, err_bayes=errs["bayes"],
                      err_oes=errs["oes"], err_pi=errs["pi"], err_ermlr=errs["ermlr"],
                      events_total=events_total, wall_time_lasso=result.lasso_seconds,
                      wall_time_erm=result.erm_seconds)


def run_benchmark(config: BenchmarkConfig):
    """All (M, n, repetition) cells; a failing repetition is recorded and the
    run continues. Rows come back sorted by (M, n, repetition)."""
    cells = []
    for M in config.Ms:
        spec = ScenarioSpec(name=config.scenario, M=M, K=config.K,
                            baseline=config.baseline, T=config.T, beta=config.beta,
                            seed=config.seed)
        mix = make_scenario(spec)
        for n in config.n_trains:
            for rep in range(config.repetitions):
                cells.append((mix, M, n, rep))

    def work(cell):
        mix, M, n, rep = cell
        try:
            return _run_one(config, mix, M, n, rep)
        except Exception as exc:  # noqa: BLE001 - failed repetitions are data
            return MetricsRow(scenario=config.scenario, M=M, n=n, repetition=rep,
                              d_hamming=float("nan"), d_l2=float("nan"),
                              err_bayes=float("nan"), err_oes=float("nan"),
                              err_pi=float("nan"), err_ermlr=float("nan"),
                              events_total=0, wall_time_lasso=float("nan"),
                              wall_time_erm=float("nan"), failed=True,
                              error=f"{type(exc).__name__}: {exc}\n{traceback.format_exc(limit=3)}")

    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            rows = list(pool.map(work, cells))
    else:
        rows = [work(c) for c in cells]
    rows.sort(key=lambda r: (r.M, r.n, r.repetition))
    return rows


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def summarize(rows) -> list:
    """Per-cell mean and sample std (ddof=1) of every metric column."""
    cells = sorted({(r.scenario, r.M, r.n) for r in rows})
    out = []
    for scenario, M, n in cells:
        group = [r for r in rows if (r.scenario, r.M, r.n) == (scenario, M, n) and not r.failed]
        for metric in _SUMMARY_METRICS:
            vals = np.array([getattr(r, metric) for r in group], dtype=float)
            mean = float(np.mean(vals)) if vals.size else float("nan")
            std = float(np.std(vals, ddof=1)) if vals.size > 1 else float("nan")
            out.append({"scenario": scenario, "M": M, "n": n, "metric": metric,
                        "mean": mean, "std": std})
    return out


def emit_report(rows, out_dir) -> dict:
    """Write metrics.csv, timings.csv, summary.csv and plotdata.json.

    Standard deviations use the n-1 divisor. Returns the file paths.
    """
    if not rows:
        raise ValueError("no rows to report")
    out = FsPath(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    metrics_path = out / "metrics.csv"
    with open(metrics_path, "w") as fh:
        fh.write(",".join(METRICS_HEADER) + "\n")
        for r in rows:
            fh.write(",".join(_fmt(getattr(r, c)) for c in METRICS_HEADER) + "\n")

    timings_path = out / "timings.csv"
    with open(timings_path, "w") as fh:
        fh.write(",".join(TIMINGS_HEADER) + "\n")
        for r in rows:
            fh.write(",".join(_fmt(getattr(r, c)) for c in TIMINGS_HEADER) + "\n")

    summary = summarize(rows)
    summary_path = out / "summary.csv"
    with open(summary_path, "w") as fh:
        fh.write("scenario,M,n,metric,mean,std\n")
        for row in summary:
            fh.write(f"{row['scenario']},{row['M']},{row['n']},{row['metric']},"
                     f"{_fmt(row['mean'])},{_fmt(row['std'])}\n")

    by_mean = {(r["scenario"], r["M"], r["n"], r["metric"]): r["mean"] for r in summary}
    scenarios_M = sorted({(r.scenario, r.M) for r in rows})
    error_series = []
    time_series = []
    for scenario, M in scenarios_M:
        ns = sorted({r.n for r in rows if (r.scenario, r.M) == (scenario, M)})
        entry = {"scenario": scenario, "M": M, "n": ns}
        for metric in ("err_bayes", "err_oes", "err_pi", "err_ermlr"):
            entry[metric] = [by_mean.get((scenario, M, n, metric), float("nan")) for n in ns]
        error_series.append(entry)
        tl, te = [], []
        for n in ns:
            group = [r for r in rows if (r.scenario, r.M, r.n) == (scenario, M, n) and not r.failed]
            tl.append(float(np.mean([r.wall_time_lasso for r in group])) if group else float("nan"))
            te.append(float(np.mean([r.wall_time_erm for r in group])) if group else float("nan"))
        time_series.append({"scenario": scenario, "M": M, "n": ns,
                            "wall_time_lasso": tl, "wall_time_erm": te})
    plot_path = out / "plotdata.json"
    with open(plot_path, "w") as fh:
        json.dump({"error_vs_n": error_series, "time_vs_n": time_series}, fh, indent=2)

    return {"metrics": str(metrics_path), "timings": str(timings_path),
            "summary": str(summary_path), "plotdata": str(plot_path)}

"""JSON wire formats shared across the library and the CLI.

  * path:    {"T": number, "events": [[t, ...], ...]} with M inner arrays
  * sample:  path object plus "label": 1-based integer
  * dataset: JSON-Lines, one sample (or unlabeled path) per line
  * params:  {"M": int, "mu": [...], "A": [[...], ...]} row-major
  * model:   p_hat, per-class mu/A, beta, variant, constraint metadata
  * fit:     per-class theta, kappa_hat, support pair list, ebic_trace
Matrix indices in files are 0-based; class labels are 1-based.
"""

from __future__ import annotations

import json
from typing import Sequence

import numpy as np

from .classify import ClassifierModel, TrainResult
from .kernels import ExponentialKernel
from .lasso import LassoFit
from .model import LabeledSample, ModelParams, Path


def path_to_dict(path: Path) -> dict:
    return {"T": path.T, "events": [ev.tolist() for ev in path.events]}


def path_from_dict(d: dict) -> Path:
    return Path(T=float(d["T"]), events=[np.asarray(ev, dtype=float) for ev in d["events"]])


def sample_to_dict(sample: LabeledSample) -> dict:
    d = path_to_dict(sample.path)
    d["label"] = sample.label
    return d


def sample_from_dict(d: dict) -> LabeledSample:
    return LabeledSample(path=path_from_dict(d), label=int(d["label"]))


def write_dataset(samples: Sequence, filename) -> None:
    with open(filename, "w") as fh:
        for s in samples:
            d = sample_to_dict(s) if isinstance(s, LabeledSample) else path_to_dict(s)
            fh.write(json.dumps(d) + "\n")


def read_dataset(filename) -> list:
    out = []
    with open(filename) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            d = json.loads(line)
            out.append(sample_from_dict(d) if "label" in d else path_from_dict(d))
    return out


def params_to_dict(params: ModelParams) -> dict:
    return {"M": params.M, "mu": params.mu.tolist(), "A": params.A.tolist()}


def params_from_dict(d: dict) -> ModelParams:
    params = ModelParams(mu=np.asarray(d["mu"], dtype=float), A=np.asarray(d["A"], dtype=float))
    if params.M != int(d["M"]):
        raise ValueError("declared M does not match the parameter arrays")
    return params


def read_params(filename) -> ModelParams:
    with open(filename) as fh:
        return params_from_dict(json.load(fh))


def write_params(params: ModelParams, filename) -> None:
    with open(filename, "w") as fh:
        json.dump(params_to_dict(params), fh, indent=2)


def model_to_dict(model: ClassifierModel) -> dict:
    return {
        "variant": model.variant,
        "beta": model.kernel.beta,
        "p_hat": model.p_hat.tolist(),
        "classes": [params_to_dict(p) for p in model.params],
        "train_size": model.train_size,
    }


def model_from_dict(d: dict) -> ClassifierModel:
    return ClassifierModel(
        p_hat=np.asarray(d["p_hat"], dtype=float),
        params=tuple(params_from_dict(c) for c in d["classes"]),
        kernel=ExponentialKernel(beta=float(d["beta"])),
        variant=d.get("variant", "pi"),
        train_size=d.get("train_size"),
    )


def read_model(filename) -> ClassifierModel:
    with open(filename) as fh:
        return model_from_dict(json.load(fh))


def write_model(model: ClassifierModel, filename) -> None:
    with open(filename, "w") as fh:
        json.dump(model_to_dict(model), fh, indent=2)


def fit_to_dict(fit: LassoFit, beta: float) -> dict:
    classes = []
    for f in fit.classes:
        classes.append({
            "theta": params_to_dict(f.theta_hat),
            "kappa_hat": f.kappa_hat,
            "support": sorted([list(p) for p in f.support]),
            "ebic_trace": [list(t) for t in f.ebic_trace],
            "n_k": f.n_k,
            "iterations_used": f.iterations_used,
        })
    return {"beta": beta, "classes": classes}


def write_fit(fit: LassoFit, beta: float, filename) -> None:
    with open(filename, "w") as fh:
        json.dump(fit_to_dict(fit, beta), fh, indent=2)

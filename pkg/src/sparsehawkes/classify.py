"""Score-based classification: L2 risk, constrained refit, and the classifier zoo.

The classifier rule is always the same posterior argmax; the variants differ
only in where the parameters come from:
  * bayes -- true parameters and weights,
  * pi    -- Lasso estimates plugged in directly,
  * oes   -- true parameters masked to the estimated supports,
  * ermlr -- Lasso supports + constrained empirical-L2-risk refit.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .kernels import ExponentialKernel
from .model import INTENSITY_FLOOR, LabeledSample, ModelParams, Path, posterior_batch
from .lasso import LassoConfig, LassoFit, fit_all_classes
from .suffstats import SuffStats, compute_suff_stats


@dataclass(frozen=True, eq=False)
class ClassifierModel:
    """Class weights plus per-class parameters; variant is a provenance tag."""

    p_hat: np.ndarray
    params: tuple
    kernel: ExponentialKernel
    variant: str = "bayes"
    train_size: int | None = None   # n used for the constraint bounds, if any

    def __post_init__(self) -> None:
        p = np.asarray(self.p_hat, dtype=float)
        if (p < 0).any() or abs(p.sum() - 1.0) > 1e-9:
            raise ValueError("p_hat must be a probability vector")
        if len(self.params) != p.shape[0]:
            raise ValueError("one parameter set per class is required")
        M0 = self.params[0].M
        if any(q.M != M0 for q in self.params):
            raise ValueError("all classes must share M")
        object.__setattr__(self, "p_hat", p)

    @property
    def K(self) -> int:
        return len(self.params)

    @property
    def M(self) -> int:
        return self.params[0].M


@dataclass(frozen=True)
class ErmConfig:
    gamma0: float = 0.1
    max_iter: int = 1000
    rel_tol: float = 1e-5
    epsilon0: float = 1e-12

    def __post_init__(self) -> None:
        if not self.gamma0 > 0:
            raise ValueError("gamma0 must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


class ConstraintSet:
    """Feasible region for the refit: mu in [1/n, log n] per entry, on-support
    A entries nonnegative with ||A||_F <= log n, off-support entries zero.

    Since the Frobenius radius equals the per-entry cap, the per-entry upper
    bound is implied by the ball; the exact Euclidean projection is
    clip-to-orthant followed by radial rescaling.
    """

    def __init__(self, n: int, supports: Sequence, M: int):
        if n < 2:
            raise ValueError("constraint set needs n >= 2")
        self.n = int(n)
        self.M = int(M)
        self.supports = tuple(frozenset(s) for s in supports)
        self.K = len(self.supports)
        self.mu_lo = 1.0 / n
        self.mu_hi = math.log(n)
        self.a_hi = math.log(n)
        self.frob_radius = math.log(n)
        self._sup_idx = []
        for s in self.supports:
            pairs = sorted(s)
            rows = np.array([p[0] for p in pairs], dtype=np.intp)
            cols = np.array([p[1] for p in pairs], dtype=np.intp)
            self._sup_idx.append((rows, cols))
        self._sizes = [self.M + len(s) for s in self.supports]
        self.n_free = int(sum(self._sizes))

    def pack(self, thetas: Sequence[ModelParams]) -> np.ndarray:
        """Flatten to the free coordinates: per class, mu then on-support A entries."""
        parts = []
        for k, th in enumerate(thetas):
            rows, cols = self._sup_idx[k]
            parts.append(th.mu)
            parts.append(th.A[rows, cols])
        return np.concatenate(parts) if parts else np.empty(0)

    def unpack(self, x: np.ndarray) -> list:
        out = []
        pos = 0
        for k in range(self.K):
            mu = x[pos:pos + self.M].copy()
            pos += self.M
            rows, cols = self._sup_idx[k]
            A = np.zeros((self.M, self.M))
            A[rows, cols] = x[pos:pos + rows.size]
            pos += rows.size
            out.append(ModelParams(mu=mu, A=A))
        return out

    def project_packed(self, x: np.ndarray) -> np.ndarray:
        out = x.copy()
        pos = 0
        for k in range(self.K):
            out[pos:pos + self.M] = np.clip(out[pos:pos + self.M], self.mu_lo, self.mu_hi)
            pos += self.M
            m = self._sup_idx[k][0].size
            a = np.maximum(out[pos:pos + m], 0.0)
            norm = np.linalg.norm(a)
            if norm > self.frob_radius:
                a *= self.frob_radius / norm
            out[pos:pos + m] = a
            pos += m
        return out

    def is_feasible(self, thetas: Sequence[ModelParams], tol: float = 0.0) -> bool:
        x = self.pack(thetas)
        return bool(np.max(np.abs(x - self.project_packed(x)), initial=0.0) <= tol)


def project(thetas: Sequence[ModelParams], constraints: ConstraintSet) -> list:
    """Exact Euclidean projection onto the constraint set (off-support entries
    are zeroed; inputs are expected to respect the supports already)."""
    masked = []
    for k, th in enumerate(thetas):
        rows, cols = constraints._sup_idx[k]
        A = np.zeros((constraints.M, constraints.M))
        A[rows, cols] = th.A[rows, cols]
        masked.append(ModelParams(mu=th.mu, A=A))
    return constraints.unpack(constraints.project_packed(constraints.pack(masked)))


class _StackedFeatures:
    """Dataset reduced to arrays for batched likelihood/risk evaluation."""

    def __init__(self, stats: Sequence[SuffStats], labels: np.ndarray | None, T: float):
        self.T = float(T)
        self.n = len(stats)
        self.M = stats[0].M if stats else 0
        self.labels = labels
        rows = []
        comps = []
        pids = []
        for i, s in enumerate(stats):
            r, c = s.stacked_rows()
            rows.append(r)
            comps.append(c)
            pids.append(np.full(r.shape[0], i, dtype=np.intp))
        self.rows = np.vstack(rows) if rows else np.empty((0, self.M + 1))
        self.comps = np.concatenate(comps) if comps else np.empty(0, np.intp)
        self.path_ids = np.concatenate(pids) if pids else np.empty(0, np.intp)
        self.comp_mat = np.stack([s.comp for s in stats]) if stats else np.empty((0, self.M))
        self.stats = tuple(stats)

    @classmethod
    def from_dataset(cls, dataset: Sequence, kernel: ExponentialKernel) -> "_StackedFeatures":
        if not dataset:
            raise ValueError("empty dataset")
        first = dataset[0]
        if isinstance(first, LabeledSample):
            stats = [compute_suff_stats(s.path, kernel) for s in dataset]
            labels = np.array([s.label for s in dataset], dtype=np.intp)
            T = dataset[0].path.T
        else:
            stats = [compute_suff_stats(p, kernel) for p in dataset]
            labels = None
            T = dataset[0].T
        return cls(stats, labels, T)


def prepare_features(dataset: Sequence, kernel: ExponentialKernel) -> _StackedFeatures:
    """Precompute reusable per-path statistics for repeated model evaluation."""
    return _StackedFeatures.from_dataset(dataset, kernel)


def _as_features(dataset, kernel: ExponentialKernel) -> _StackedFeatures:
    if isinstance(dataset, _StackedFeatures):
        return dataset
    return _StackedFeatures.from_dataset(dataset, kernel)


def _log_scores(feat: _StackedFeatures, thetas: Sequence[ModelParams]):
    """F matrix (n, K) of per-class path log-densities, plus per-event
    intensities (n_events, K) for gradient reuse."""
    K = len(thetas)
    F = np.empty((feat.n, K))
    lam_all = np.empty((feat.rows.shape[0], K))
    for k, th in enumerate(thetas):
        theta = th.theta
        compensator = feat.T * theta[:, 0].sum() + feat.comp_mat @ theta[:, 1:].sum(axis=0)
        lam = np.einsum("ij,ij->i", feat.rows, theta[feat.comps]) if feat.rows.size else np.empty(0)
        lam_all[:, k] = lam
        logs = np.log(np.maximum(lam, INTENSITY_FLOOR))
        F[:, k] = -compensator + np.bincount(feat.path_ids, weights=logs, minlength=feat.n)
    return F, lam_all


def score(model: ClassifierModel, path: Path) -> np.ndarray:
    """Score vector f = 2*posterior - 1; entries sum to 2 - K."""
    feat = _StackedFeatures([compute_suff_stats(path, model.kernel)], None, path.T)
    F, _ = _log_scores(feat, model.params)
    pi = posterior_batch(model.p_hat, F)[0]
    return 2.0 * pi - 1.0


def _z_matrix(labels: np.ndarray, K: int) -> np.ndarray:
    Z = -np.ones((labels.size, K))
    Z[np.arange(labels.size), labels - 1] = 1.0
    return Z


def _risk_from_pi(pi: np.ndarray, labels: np.ndarray) -> float:
    n, K = pi.shape
    ind = np.zeros((n, K))
    ind[np.arange(n), labels - 1] = 1.0
    return float(4.0 * np.sum((ind - pi) ** 2) / n)


def empirical_l2_risk(dataset, p_hat: np.ndarray, thetas: Sequence[ModelParams],
                      kernel: ExponentialKernel) -> float:
    """(1/n) sum_i sum_k (Z_k - f_k)^2 with Z_k = 2*1{Y=k} - 1; lies in [0, 4K]."""
    feat = _as_features(dataset, kernel)
    if feat.n == 0 or feat.labels is None:
        raise ValueError("empty dataset")
    F, _ = _log_scores(feat, thetas)
    pi = posterior_batch(p_hat, F)
    return _risk_from_pi(pi, feat.labels)


def _risk_and_grad(feat: _StackedFeatures, p_hat: np.ndarray,
                   thetas: Sequence[ModelParams], constraints: ConstraintSet):
    """Empirical L2 risk and its gradient on the free coordinates.

    Chain rule: dRisk/dF_k = -(4/n) pi_k [(Z_k - f_k) - sum_m (Z_m - f_m) pi_m],
    then dF/dmu_j = -T + sum_{events of j} 1/lambda and
    dF/da_{jl} = -comp_l + sum_{events of j} H_l/lambda, with zero
    sub-derivative where lambda sits at the clamp floor.
    """
    labels = feat.labels
    n = feat.n
    K = len(thetas)
    F, lam_all = _log_scores(feat, thetas)
    pi = posterior_batch(p_hat, F)
    risk = _risk_from_pi(pi, labels)

    Z = _z_matrix(labels, K)
    resid = Z - (2.0 * pi - 1.0)
    srow = np.sum(resid * pi, axis=1, keepdims=True)
    chain = -(4.0 / n) * pi * (resid - srow)          # (n, K)

    grads = []
    for k in range(K):
        ck = chain[:, k]
        csum = float(ck.sum())
        grad_theta = np.empty((feat.M, feat.M + 1))
        grad_theta[:, 0] = -feat.T * csum
        grad_theta[:, 1:] = -(ck @ feat.comp_mat)[None, :]
        if feat.rows.size:
            lam = lam_all[:, k]
            ok = lam > INTENSITY_FLOOR
            w = np.where(ok, ck[feat.path_ids] / np.maximum(lam, INTENSITY_FLOOR), 0.0)
            for l in range(feat.M + 1):
                grad_theta[:, l] += np.bincount(feat.comps, weights=w * feat.rows[:, l],
                                                minlength=feat.M)
        rows, cols = constraints._sup_idx[k]
        grads.append(np.concatenate([grad_theta[:, 0], grad_theta[rows, cols + 1]]))
    return risk, np.concatenate(grads)


def risk_gradient(dataset, p_hat: np.ndarray, thetas: Sequence[ModelParams],
                  constraints: ConstraintSet, kernel: ExponentialKernel) -> np.ndarray:
    """Gradient of the empirical L2 risk restricted to the free coordinates
    (per class: mu entries, then on-support A entries in row-major order)."""
    feat = _as_features(dataset, kernel)
    _, grad = _risk_and_grad(feat, p_hat, thetas, constraints)
    return grad


@dataclass(frozen=True, eq=False)
class RefitResult:
    thetas: tuple
    initial_risk: float
    best_risk: float
    iterations: int


def free_adagrad(initial_thetas: Sequence[ModelParams], dataset, p_hat: np.ndarray,
                 constraints: ConstraintSet, config: ErmConfig | None = None,
                 kernel: ExponentialKernel | None = None) -> RefitResult:
    """Parameter-free projected adaptive gradient descent on the L2 risk.

    Step size gamma_t / sqrt(eps0 + sum of squared gradient norms); the
    distance estimate gamma doubles whenever the iterate wanders further than
    gamma from the start. The objective is non-convex, so the best iterate by
    risk is returned rather than the last.
    """
    config = config or ErmConfig()
    if kernel is None:
        raise ValueError("kernel is required")
    feat = _as_features(dataset, kernel)
    x0 = constraints.project_packed(constraints.pack(list(initial_thetas)))
    x = x0.copy()
    risk0, grad = _risk_and_grad(feat, p_hat, constraints.unpack(x), constraints)
    best_risk, best_x = risk0, x.copy()
    gamma = config.gamma0
    acc = config.epsilon0
    iters = 0
    for t in range(config.max_iter):
        gnorm2 = float(grad @ grad)
        if gnorm2 == 0.0:
            break
        acc += gnorm2
        x_new = constraints.project_packed(x - (gamma / math.sqrt(acc)) * grad)
        while np.linalg.norm(x_new - x0) > gamma:
            gamma *= 2.0
        step = np.linalg.norm(x_new - x)
        risk, grad = _risk_and_grad(feat, p_hat, constraints.unpack(x_new), constraints)
        iters = t + 1
        if risk < best_risk:
            best_risk, best_x = risk, x_new.copy()
        if step <= config.rel_tol * max(1.0, np.linalg.norm(x)):
            x = x_new
            break
        x = x_new
    return RefitResult(thetas=tuple(constraints.unpack(best_x)), initial_risk=risk0,
                       best_risk=best_risk, iterations=iters)


@dataclass(frozen=True, eq=False)
class TrainResult:
    ermlr: ClassifierModel
    pi: ClassifierModel
    oes: ClassifierModel | None
    lasso: LassoFit
    constraints: ConstraintSet
    p_hat: np.ndarray
    initial_risk: float
    final_risk: float
    lasso_seconds: float = 0.0
    erm_seconds: float = 0.0


def class_frequencies(labels: np.ndarray, K: int) -> np.ndarray:
    return np.bincount(labels, minlength=K + 1)[1:K + 1] / labels.size


def train_ermlr(train_dataset: Sequence[LabeledSample], lasso_config: LassoConfig | None = None,
                erm_config: ErmConfig | None = None, split_mode: str = "none", *,
                kernel: ExponentialKernel, K: int | None = None,
                true_params: Sequence[ModelParams] | None = None) -> TrainResult:
    """Three-stage pipeline: class frequencies, per-class Lasso supports,
    constrained risk refit from the projected Lasso estimates.

    `split_mode="half"` estimates the frequencies on the first half and fits
    on the second (the theoretical protocol); the default reuses the full set
    (the experimental protocol). The plug-in (pi) model and, when true
    parameters are given, the oracle-on-estimated-support (oes) model are
    exposed alongside.
    """
    if not train_dataset:
        raise ValueError("empty training set")
    if split_mode not in ("none", "half"):
        raise ValueError("split_mode must be 'none' or 'half'")
    labels_all = np.array([s.label for s in train_dataset], dtype=np.intp)
    K = K or int(labels_all.max())

    if split_mode == "half":
        n_half = len(train_dataset) // 2
        freq_labels = labels_all[:n_half]
        fit_set = train_dataset[n_half:]
    else:
        freq_labels = labels_all
        fit_set = train_dataset

    p_hat = class_frequencies(freq_labels, K)
    if (p_hat == 0).any():
        warnings.warn("some class has zero estimated weight; it is never predicted")

    t0 = time.perf_counter()
    feat = prepare_features(fit_set, kernel)
    stats_by_class = {k: [] for k in range(1, K + 1)}
    for s, lab in zip(feat.stats, feat.labels):
        stats_by_class[int(lab)].append(s)
    lasso_fit = fit_all_classes(fit_set, K, kernel, lasso_config, stats_by_class=stats_by_class)
    t1 = time.perf_counter()

    pi_model = ClassifierModel(p_hat=p_hat, params=tuple(f.theta_hat for f in lasso_fit.classes),
                               kernel=kernel, variant="pi", train_size=len(fit_set))

    constraints = ConstraintSet(n=len(fit_set), supports=lasso_fit.supports, M=feat.M)
    init = project([f.theta_hat for f in lasso_fit.classes], constraints)
    refit = free_adagrad(init, feat, p_hat, constraints, erm_config, kernel=kernel)
    t2 = time.perf_counter()
    ermlr_model = ClassifierModel(p_hat=p_hat, params=refit.thetas, kernel=kernel,
                                  variant="ermlr", train_size=len(fit_set))

    oes_model = None
    if true_params is not None:
        masked = []
        for k in range(K):
            A = np.zeros((feat.M, feat.M))
            rows, cols = constraints._sup_idx[k]
            A[rows, cols] = true_params[k].A[rows, cols]
            masked.append(ModelParams(mu=true_params[k].mu, A=A))
        oes_model = ClassifierModel(p_hat=p_hat, params=tuple(masked), kernel=kernel,
                                    variant="oes", train_size=len(fit_set))

    return TrainResult(ermlr=ermlr_model, pi=pi_model, oes=oes_model, lasso=lasso_fit,
                       constraints=constraints, p_hat=p_hat,
                       initial_risk=refit.initial_risk, final_risk=refit.best_risk,
                       lasso_seconds=t1 - t0, erm_seconds=t2 - t1)


def predict_batch(model: ClassifierModel, dataset) -> np.ndarray:
    """1-based predicted labels; ties resolve to the lowest class index."""
    feat = _as_features(dataset, model.kernel)
    F, _ = _log_scores(feat, model.params)
    pi = posterior_batch(model.p_hat, F)
    return np.argmax(pi, axis=1) + 1


def error_rate(model: ClassifierModel, test_dataset) -> float:
    """Fraction of misclassified samples on a labeled test set."""
    feat = _as_features(test_dataset, model.kernel)
    if feat.n == 0 or feat.labels is None:
        raise ValueError("empty test set")
    pred = predict_batch(model, feat)
    return float(np.mean(pred != feat.labels))

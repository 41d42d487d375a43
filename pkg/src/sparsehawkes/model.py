"""Multivariate Hawkes model: parameters, paths, intensities, likelihood, posterior.

Conventions used throughout the library:
  * component indices are 0-based in code, class labels are 1-based;
  * the intensity of component j is lambda_j(t) = mu_j + sum_{j'} A[j, j'] H_{j'}(t)
    where H_{j'}(t) sums the kernel over events of j' strictly before t
    (left limit, so the intensity is predictable);
  * all reals are float64, times live in abstract units on [0, T].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .kernels import ExponentialKernel

#: Intensities passing through a log are clamped at this floor; unconstrained
#: Lasso iterates can make them non-positive while EBIC still needs a finite
#: log-likelihood.
INTENSITY_FLOOR = 1e-10


@dataclass(frozen=True, eq=False)
class ModelParams:
    """Baselines mu (length M) and interaction matrix A (M x M).

    Entry A[j, j2] scales the influence of component j2 on component j.
    The model semantics are nonnegative; estimation steps may hold signed
    values, so only finiteness is enforced here and nonnegativity is checked
    where it matters (simulation).
    """

    mu: np.ndarray
    A: np.ndarray

    def __post_init__(self) -> None:
        mu = np.asarray(self.mu, dtype=float)
        A = np.asarray(self.A, dtype=float)
        if mu.ndim != 1:
            raise ValueError("mu must be a vector")
        M = mu.shape[0]
        if A.shape != (M, M):
            raise ValueError(f"A must be {M}x{M}, got {A.shape}")
        if not (np.isfinite(mu).all() and np.isfinite(A).all()):
            raise ValueError("parameters must be finite")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "A", A)

    @property
    def M(self) -> int:
        return self.mu.shape[0]

    @property
    def theta(self) -> np.ndarray:
        """Row-wise parameter layout theta[j] = (mu_j, A[j, 0], ..., A[j, M-1])."""
        return np.column_stack([self.mu, self.A])

    @classmethod
    def from_theta(cls, theta: np.ndarray) -> "ModelParams":
        theta = np.asarray(theta, dtype=float)
        return cls(mu=theta[:, 0].copy(), A=theta[:, 1:].copy())

    def require_nonnegative(self) -> None:
        if (self.mu < 0).any() or (self.A < 0).any():
            raise ValueError("parameters must be nonnegative")


@dataclass(frozen=True, eq=False)
class Path:
    """One observed realization: per-component sorted event times in (0, T]."""

    T: float
    events: tuple

    def __init__(self, T: float, events: Sequence[np.ndarray]):
        if not (T > 0 and math.isfinite(T)):
            raise ValueError("T must be a positive finite real")
        evs = []
        for j, ev in enumerate(events):
            ev = np.asarray(ev, dtype=float)
            if ev.ndim != 1:
                raise ValueError("each component's events must be a 1-d array")
            if ev.size:
                if not (ev > 0).all() or not (ev <= T).all():
                    raise ValueError(f"component {j}: events must lie in (0, T]")
                if not (np.diff(ev) > 0).all():
                    raise ValueError(f"component {j}: events must be strictly increasing")
            evs.append(ev)
        object.__setattr__(self, "T", float(T))
        object.__setattr__(self, "events", tuple(evs))

    @property
    def M(self) -> int:
        return len(self.events)

    @property
    def counts(self) -> np.ndarray:
        return np.array([ev.size for ev in self.events])

    @property
    def n_events(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True, eq=False)
class LabeledSample:
    path: Path
    label: int

    def __post_init__(self) -> None:
        if not (isinstance(self.label, (int, np.integer)) and self.label >= 1):
            raise ValueError("label must be an integer >= 1")
        object.__setattr__(self, "label", int(self.label))


@dataclass(frozen=True, eq=False)
class Posterior:
    """Conditional class probabilities; entries sum to one."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or (p < 0).any() or (p > 1).any():
            raise ValueError("probabilities must lie in [0, 1]")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to one")
        object.__setattr__(self, "probs", p)


class LogDensity(NamedTuple):
    """Log-density value with a flag set when the intensity floor was hit."""

    value: float
    clamped: bool


def kernel_convolution(path: Path, kernel: ExponentialKernel, source: int, t: float) -> float:
    """H_source(t): kernel sum over events of `source` strictly before t."""
    if not (0 <= t <= path.T):
        raise ValueError("t must lie in [0, T]")
    ev = path.events[source]
    past = ev[ev < t]
    if past.size == 0:
        return 0.0
    return float(np.sum(kernel.evaluate(t - past)))


def intensity(params: ModelParams, kernel: ExponentialKernel, path: Path, target: int, t: float) -> float:
    """lambda_target(t) = mu_target + sum_j A[target, j] * H_j(t)."""
    H = np.array([kernel_convolution(path, kernel, j, t) for j in range(path.M)])
    return float(params.mu[target] + params.A[target] @ H)


def history_rows(path: Path, kernel: ExponentialKernel):
    """Kernel-convolution state at every event of the path.

    Returns (times, comps, rows) with events merged across components in time
    order; rows[e] = (1, H_1(t_e), ..., H_M(t_e)) under the strict-exclusion
    convention, computed by the exponential decay recursion
    H(t + dt) = exp(-beta*dt) * H(t), with a +beta jump after each event.
    Events sharing an exact timestamp (possible across components) do not see
    each other.
    """
    M = path.M
    beta = kernel.beta
    times = np.concatenate([ev for ev in path.events]) if M else np.empty(0)
    comps = np.concatenate([np.full(ev.size, j, dtype=np.intp) for j, ev in enumerate(path.events)])
    order = np.argsort(times, kind="stable")
    times = times[order]
    comps = comps[order]
    n = times.size
    rows = np.empty((n, M + 1))
    rows[:, 0] = 1.0
    if n == 0:
        return times, comps, rows
    H = np.zeros(M)
    prev_t = 0.0
    i = 0
    while i < n:
        t = times[i]
        if t > prev_t:
            H *= math.exp(-beta * (t - prev_t))
            prev_t = t
        j = i
        while j < n and times[j] == t:
            j += 1
        rows[i:j, 1:] = H
        for e in range(i, j):
            H[comps[e]] += beta
        i = j
    return times, comps, rows


def _loglik_from_rows(theta: np.ndarray, rows: np.ndarray, comps: np.ndarray,
                      comp_vec: np.ndarray, T: float, floor: float = INTENSITY_FLOOR) -> LogDensity:
    """F(theta) = -sum_j integral(lambda_j) + sum over events of log lambda.

    `comp_vec[j]` holds the per-source compensator pieces
    sum_{events of j} (1 - exp(-beta (T - t))); the compensator is then
    mu_j*T + (A @ comp_vec)_j in closed form.
    """
    mu = theta[:, 0]
    A = theta[:, 1:]
    compensator = float(np.sum(mu * T + A @ comp_vec))
    if rows.shape[0]:
        lam = np.einsum("ij,ij->i", rows, theta[comps])
        clamped = bool((lam <= floor).any())
        log_term = float(np.sum(np.log(np.maximum(lam, floor))))
    else:
        clamped = False
        log_term = 0.0
    return LogDensity(value=-compensator + log_term, clamped=clamped)


def log_density(params: ModelParams, kernel: ExponentialKernel, path: Path) -> LogDensity:
    """Log-density of a path under the model (Hawkes vs unit-rate reference).

    The compensator uses the closed form mu_j*T + sum_j' A[j,j'] * sum_l
    (1 - exp(-beta (T - T_l))); event intensities below INTENSITY_FLOOR are
    clamped and flagged.
    """
    if params.M != path.M:
        raise ValueError("dimension mismatch between params and path")
    times, comps, rows = history_rows(path, kernel)
    comp_vec = np.array([np.sum(kernel.integral_to(path.T - ev)) if ev.size else 0.0
                         for ev in path.events])
    return _loglik_from_rows(params.theta, rows, comps, comp_vec, path.T)


def posterior(class_weights: np.ndarray, log_scores: np.ndarray) -> Posterior:
    """Class posterior p_k * exp(F_k) / sum, computed in log space.

    Weights may contain zeros (those classes get probability zero); all-zero
    weights are rejected. Stable under arbitrary shifts of the scores.
    """
    p = np.asarray(class_weights, dtype=float)
    F = np.asarray(log_scores, dtype=float)
    if p.shape != F.shape or p.ndim != 1:
        raise ValueError("class_weights and log_scores must be equal-length vectors")
    if (p < 0).any():
        raise ValueError("class weights must be nonnegative")
    if not p.any():
        raise ValueError("degenerate class weights")
    if abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("class weights must sum to one")
    return Posterior(probs=_posterior_probs(p, F))


def _posterior_probs(p: np.ndarray, F: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        logits = np.log(p) + F
    m = logits.max()
    w = np.exp(logits - m)
    return w / w.sum()


def posterior_batch(class_weights: np.ndarray, F: np.ndarray) -> np.ndarray:
    """Row-wise posterior for an (n, K) matrix of log-scores."""
    p = np.asarray(class_weights, dtype=float)
    if (p < 0).any() or not p.any():
        raise ValueError("degenerate class weights")
    with np.errstate(divide="ignore"):
        logits = np.log(p)[None, :] + np.asarray(F, dtype=float)
    m = logits.max(axis=1, keepdims=True)
    w = np.exp(logits - m)
    return w / w.sum(axis=1, keepdims=True)


def bayes_classify(model, path: Path) -> int:
    """Maximum-posterior label (1-based); ties go to the lowest class index."""
    F = np.array([log_density(params, model.kernel, path).value for params in model.params])
    post = posterior(model.p_hat, F)
    return int(np.argmax(post.probs)) + 1

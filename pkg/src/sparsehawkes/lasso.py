"""L1-penalized least-squares fit per class: FISTA solver, EBIC calibration.

The row problems are independent: for each target component j the objective is
    theta_j' G_bar theta_j - 2 b_bar_j' theta_j + kappa * sum_{l>=1} |theta_{j,l}|
with the intercept (baseline) unpenalized. The solver runs all rows as one
matrix iteration; a converged row freezes, which reproduces independent
per-row runs exactly because the momentum sequence is row-independent.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from .kernels import ExponentialKernel
from .model import ModelParams
from .suffstats import ClassStats, SuffStats, aggregate, compute_suff_stats, log_density_from_stats


@dataclass(frozen=True)
class LassoConfig:
    grid_size: int = 40
    ebic_gamma: float = 1.0
    max_iter: int = 200
    rel_tol: float = 1e-6
    grid_decades: float = 3.0
    nonnegative: bool = False

    def __post_init__(self) -> None:
        if self.grid_size < 2:
            raise ValueError("grid_size must be at least 2")
        if not 0.0 <= self.ebic_gamma <= 1.0:
            raise ValueError("ebic_gamma must lie in [0, 1]")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass(frozen=True, eq=False)
class ClassLassoFit:
    """Fit of one class: estimate, chosen penalty, support and EBIC trace."""

    theta_hat: ModelParams
    kappa_hat: float
    support: frozenset          # 0-based (row, column) pairs of nonzero A entries
    ebic_trace: tuple           # (kappa, ebic, support size) per grid point
    iterations_used: int
    n_k: int


@dataclass(frozen=True, eq=False)
class LassoFit:
    """Per-class fits, indexed by label-1."""

    classes: tuple

    @property
    def K(self) -> int:
        return len(self.classes)

    def __getitem__(self, k: int) -> ClassLassoFit:
        return self.classes[k]

    @property
    def supports(self) -> tuple:
        return tuple(f.support for f in self.classes)


def soft_threshold(x, tau, nonnegative: bool = False):
    """Proximal map of tau*|.|; with `nonnegative`, of tau*|.| plus the orthant."""
    if np.any(np.asarray(tau) < 0):
        raise ValueError("tau must be nonnegative")
    x = np.asarray(x, dtype=float)
    if nonnegative:
        out = np.maximum(x - tau, 0.0)
    else:
        out = np.sign(x) * np.maximum(np.abs(x) - tau, 0.0)
    return out if out.ndim else float(out)


def lipschitz_bound(cs: ClassStats, tol: float = 1e-8, max_iter: int = 1000) -> float:
    """L = 2 * lambda_max(G_bar) by power iteration, inflated by 1.01."""
    G = cs.G_bar
    if not G.any():
        return 1e-12
    d = G.shape[0]
    v = np.ones(d) + 1e-3 * np.arange(d) / d
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = G @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 1e-12
        v_new = w / norm
        lam_new = float(v_new @ (G @ v_new))
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            lam = lam_new
            break
        lam, v = lam_new, v_new
    return max(2.0 * lam * 1.01, 1e-12)


def _fista(G: np.ndarray, b: np.ndarray, kappa: float, L: float,
           config: LassoConfig, theta0: np.ndarray | None = None):
    """Run FISTA on all rows at once; returns (Theta, iterations).

    Stops each row when ||x_{m+1} - x_m||_2 <= rel_tol * max(1, ||x_m||_2),
    or globally at max_iter; the last iterate is returned.
    """
    R = b.shape[0]
    x = np.zeros_like(b) if theta0 is None else np.array(theta0, dtype=float)
    y = x.copy()
    t = 1.0
    active = np.ones(R, dtype=bool)
    iters = 0
    for m in range(config.max_iter):
        grad = 2.0 * (y @ G - b)
        z = y - grad / L
        z[:, 1:] = soft_threshold(z[:, 1:], kappa / L, config.nonnegative)
        x_new = np.where(active[:, None], z, x)
        step = np.linalg.norm(x_new - x, axis=1)
        scale = np.maximum(1.0, np.linalg.norm(x, axis=1))
        newly_done = active & (step <= config.rel_tol * scale)
        iters = m + 1
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = x_new + ((t - 1.0) / t_new) * (x_new - x)
        y[~active] = x_new[~active]
        x = x_new
        t = t_new
        active &= ~newly_done
        if not active.any():
            break
    return x, iters


def fista_row(cs: ClassStats, row: int, kappa: float, config: LassoConfig | None = None,
              theta0: np.ndarray | None = None) -> np.ndarray:
    """Solve the single-row problem; returns the (M+1,) parameter vector."""
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    config = config or LassoConfig()
    L = lipschitz_bound(cs)
    b = cs.b_bar[row:row + 1]
    init = None if theta0 is None else np.asarray(theta0, dtype=float)[None, :]
    x, _ = _fista(cs.G_bar, b, kappa, L, config, init)
    return x[0]


def kappa_grid(cs: ClassStats, config: LassoConfig | None = None) -> np.ndarray:
    """Decreasing log-spaced penalty grid from kappa_max over `grid_decades` decades.

    kappa_max is the smallest penalty zeroing every interaction at the
    profiled intercept mu_j = b_{j,0} (G[0,0] is 1 by construction).
    """
    config = config or LassoConfig()
    mu_tilde = cs.b_bar[:, 0]
    grad_at_zero = 2.0 * (np.outer(mu_tilde, cs.G_bar[0, 1:]) - cs.b_bar[:, 1:])
    kappa_max = float(np.max(np.abs(grad_at_zero))) if grad_at_zero.size else 0.0
    if kappa_max == 0.0:
        warnings.warn("kappa_max is zero (no events); degenerate single-point grid")
        return np.array([0.0])
    return np.geomspace(kappa_max, kappa_max * 10.0 ** (-config.grid_decades), config.grid_size)


def support_of(params: ModelParams) -> frozenset:
    rows, cols = np.nonzero(params.A)
    return frozenset(zip(rows.tolist(), cols.tolist()))


def ebic(theta: ModelParams, class_paths: Sequence[SuffStats], n_k: int, M: int,
         gamma: float) -> float:
    """-2 * sum of path log-densities + |S| log(n_k) + 2*gamma*log C(M^2, |S|)."""
    if n_k < 1:
        raise ValueError("n_k must be at least 1")
    loglik = sum(log_density_from_stats(s, theta).value for s in class_paths)
    s = int(np.count_nonzero(theta.A))
    return -2.0 * loglik + s * np.log(n_k) + 2.0 * gamma * _log_binom(M * M, s)


def _log_binom(n: int, k: int) -> float:
    return float(gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1))


def kkt_violation(cs: ClassStats, theta: ModelParams, kappa: float) -> float:
    """Max violation of the zero-subgradient conditions at theta.

    Active interactions need |grad + kappa*sign| small; inactive ones need
    |grad| <= kappa; the unpenalized intercept needs |grad| small.
    """
    th = theta.theta
    grad = 2.0 * (th @ cs.G_bar - cs.b_bar)
    viol = np.max(np.abs(grad[:, 0])) if grad.size else 0.0
    gA = grad[:, 1:]
    A = th[:, 1:]
    active = A != 0
    if active.any():
        viol = max(viol, float(np.max(np.abs(gA[active] + kappa * np.sign(A[active])))))
    if (~active).any():
        viol = max(viol, float(np.max(np.maximum(np.abs(gA[~active]) - kappa, 0.0))))
    return float(viol)


def _restricted_ls(cs: ClassStats, mask: np.ndarray) -> np.ndarray:
    """Unpenalized least-squares solution restricted to the support pattern."""
    theta = np.zeros((cs.M, cs.M + 1))
    for j in range(cs.M):
        idx = np.concatenate([[0], 1 + np.flatnonzero(mask[j])]).astype(np.intp)
        G = cs.G_bar[np.ix_(idx, idx)]
        b = cs.b_bar[j, idx]
        try:
            theta[j, idx] = np.linalg.solve(G, b)
        except np.linalg.LinAlgError:
            theta[j, idx] = np.linalg.lstsq(G, b, rcond=None)[0]
    return theta


def fit_class(class_paths: Sequence, kernel: ExponentialKernel,
              config: LassoConfig | None = None, M: int | None = None,
              kappa_fixed: float | None = None) -> ClassLassoFit:
    """EBIC-calibrated Lasso fit of one class.

    `class_paths` may hold Path or precomputed SuffStats. An empty class
    yields the zero fit. The penalty path is explored from the largest kappa
    down with warm starts; each kappa contributes a support candidate whose
    EBIC is scored at the candidate's restricted least-squares refit (scoring
    the shrunk path iterate instead lets the likelihood-vs-penalty trade-off
    track the shrinkage level rather than the support). Across distinct
    supports, ties prefer the larger kappa (sparser model); within the
    winning support all grid points tie by construction, and kappa_hat is the
    smallest of them (least shrinkage). The returned estimate is the
    penalized solution at kappa_hat, re-solved until its subgradient
    certificate is tight. `kappa_fixed` bypasses the grid entirely.
    """
    config = config or LassoConfig()
    stats = [p if isinstance(p, SuffStats) else compute_suff_stats(p, kernel) for p in class_paths]
    if not stats:
        if M is None:
            raise ValueError("M is required for an empty class")
        zero = ModelParams(mu=np.zeros(M), A=np.zeros((M, M)))
        return ClassLassoFit(theta_hat=zero, kappa_hat=0.0, support=frozenset(),
                             ebic_trace=(), iterations_used=0, n_k=0)
    cs = aggregate(stats)
    Mdim = cs.M
    L = lipschitz_bound(cs)
    grid = np.array([kappa_fixed], dtype=float) if kappa_fixed is not None else kappa_grid(cs, config)

    theta = np.zeros((Mdim, Mdim + 1))
    trace = []
    path = []
    total_iters = 0
    scored = {}
    for kappa in grid:
        theta, iters = _fista(cs.G_bar, cs.b_bar, float(kappa), L, config, theta)
        total_iters += iters
        mask = theta[:, 1:] != 0
        key = mask.tobytes()
        if key not in scored:
            refit = ModelParams.from_theta(_restricted_ls(cs, mask))
            scored[key] = float(ebic(refit, cs.paths, cs.n_k, Mdim, config.ebic_gamma))
        trace.append((float(kappa), scored[key], int(mask.sum())))
        path.append((float(kappa), key, theta.copy()))

    best_key, best_crit = None, None
    for _, key, _theta in path:                    # largest kappa first: sparser wins ties
        if best_crit is None or scored[key] < best_crit:
            best_key, best_crit = key, scored[key]
    for kappa, key, th in reversed(path):          # smallest kappa with the winning support
        if key == best_key:
            kappa_hat, theta_hat = kappa, th
            break
    tight = LassoConfig(grid_size=config.grid_size, ebic_gamma=config.ebic_gamma,
                        max_iter=config.max_iter, rel_tol=0.0,
                        grid_decades=config.grid_decades, nonnegative=config.nonnegative)
    for _ in range(50):
        if kkt_violation(cs, ModelParams.from_theta(theta_hat), kappa_hat) <= 1e-5:
            break
        theta_hat, iters = _fista(cs.G_bar, cs.b_bar, kappa_hat, L, tight, theta_hat)
        total_iters += iters
    params_hat = ModelParams.from_theta(theta_hat)
    return ClassLassoFit(theta_hat=params_hat, kappa_hat=kappa_hat,
                         support=support_of(params_hat), ebic_trace=tuple(trace),
                         iterations_used=total_iters, n_k=cs.n_k)


def fit_all_classes(dataset: Sequence, K: int, kernel: ExponentialKernel,
                    config: LassoConfig | None = None,
                    kappa_fixed: float | None = None,
                    stats_by_class: dict | None = None) -> LassoFit:
    """Per-class fits over a labeled dataset; absent classes get the zero fit."""
    if stats_by_class is None:
        stats_by_class = {k: [] for k in range(1, K + 1)}
        for sample in dataset:
            if sample.label > K:
                raise ValueError(f"label {sample.label} exceeds K={K}")
            stats_by_class[sample.label].append(compute_suff_stats(sample.path, kernel))
    nonempty = [s for s in stats_by_class.values() if s]
    if not nonempty:
        raise ValueError("cannot fit on an empty dataset")
    M = nonempty[0][0].M
    fits = []
    for k in range(1, K + 1):
        paths = stats_by_class.get(k, [])
        if not paths:
            warnings.warn(f"class {k} absent from training data; using the zero fit")
        fits.append(fit_class(paths, kernel, config, M=M, kappa_fixed=kappa_fixed))
    return LassoFit(classes=tuple(fits))

"""Per-path and per-class sufficient statistics for the least-squares contrast.

For the exponential kernel every integral in the contrast has a closed form,
so each path reduces to
  * G = (1/T) * integral of H(t) H(t)' over [0, T] with H_0 == 1,
  * event_rows: the H vector evaluated at every event (one block per
    component, used for the linear term, the likelihood and the ERM risk),
  * comp: per-source compensator pieces sum_l (1 - exp(-beta (T - T_l))).

The contrast for theta rows theta_j = (mu_j, a_j1, ..., a_jM) is then exactly
sum_j theta_j' G theta_j - 2 b_j' theta_j.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .kernels import ExponentialKernel
from .model import INTENSITY_FLOOR, LogDensity, ModelParams, Path, _loglik_from_rows, history_rows


@dataclass(frozen=True, eq=False)
class SuffStats:
    """Closed-form sufficient statistics of one path."""

    T: float
    G: np.ndarray            # (M+1, M+1), symmetric PSD, G[0,0] == 1
    event_rows: tuple        # per component j: (n_j, M+1) rows (1, H_1, ..., H_M)
    b: np.ndarray            # (M, M+1); b[j] = column sums of event_rows[j] / T
    comp: np.ndarray         # (M,) compensator pieces per source component

    @property
    def M(self) -> int:
        return self.b.shape[0]

    @property
    def counts(self) -> np.ndarray:
        return np.array([r.shape[0] for r in self.event_rows])

    def stacked_rows(self):
        """All event rows concatenated component-by-component, with component ids."""
        M = self.M
        rows = np.vstack(self.event_rows) if M else np.empty((0, 1))
        comps = np.concatenate([np.full(r.shape[0], j, dtype=np.intp)
                                for j, r in enumerate(self.event_rows)]) if M else np.empty(0, np.intp)
        return rows, comps


def compute_suff_stats(path: Path, kernel: ExponentialKernel) -> SuffStats:
    """Compute SuffStats in O(total events * M) using the decay recursion.

    The pairwise Gram entries come from the same recursion: for sources
    (u, v), sum over ordered event pairs of exp(-beta |t_l - t_m|) equals
    (1/beta) * (colsum_v[u] + colsum_u[v]) plus the count of equal-time pairs,
    and the horizon correction factorizes through e_j = sum_l exp(-beta(T-t_l)).
    """
    M = path.M
    T = path.T
    beta = kernel.beta
    times, comps, rows = history_rows(path, kernel)
    n = times.size

    # history_rows merges components in time order; regroup rows per component.
    per_comp = [rows[comps == j] for j in range(M)]

    G = np.zeros((M + 1, M + 1))
    G[0, 0] = 1.0
    b = np.zeros((M, M + 1))
    comp_vec = np.array([np.sum(kernel.integral_to(T - ev)) if ev.size else 0.0
                         for ev in path.events])
    if n == 0:
        return SuffStats(T=T, G=G, event_rows=tuple(per_comp), b=b, comp=comp_vec)

    # C[j, l] = sum of H_l over events of component j (l = 0 gives n_j).
    C = np.zeros((M, M + 1))
    for l in range(M + 1):
        C[:, l] = np.bincount(comps, weights=rows[:, l], minlength=M)
    b[:] = C / T

    e_tail = np.array([np.sum(np.exp(-beta * (T - ev))) if ev.size else 0.0
                       for ev in path.events])

    # Equal-time pair counts; diagonal picks up one per event (|t - t| = 0).
    tie = np.zeros((M, M))
    uniq, start = np.unique(times, return_index=True)
    boundaries = np.append(start, n)
    for g in range(uniq.size):
        lo, hi = boundaries[g], boundaries[g + 1]
        if hi - lo == 1:
            c = comps[lo]
            tie[c, c] += 1.0
        else:
            gvec = np.bincount(comps[lo:hi], minlength=M).astype(float)
            tie += np.outer(gvec, gvec)

    inner = C[:, 1:]
    cross = (inner + inner.T) / (2.0 * T)
    G[1:, 1:] = cross + (beta / (2.0 * T)) * (tie - np.outer(e_tail, e_tail))
    G[0, 1:] = comp_vec / T
    G[1:, 0] = G[0, 1:]
    return SuffStats(T=T, G=G, event_rows=tuple(per_comp), b=b, comp=comp_vec)


@dataclass(frozen=True, eq=False)
class ClassStats:
    """Averaged statistics of one class's paths (the 1/n_k empirical mean)."""

    M: int
    T: float
    n_k: int
    G_bar: np.ndarray
    b_bar: np.ndarray
    paths: tuple  # per-path SuffStats, in the original order (EBIC / ERM reuse)

    @property
    def empty(self) -> bool:
        return self.n_k == 0


def _tree_sum(arrs: np.ndarray) -> np.ndarray:
    """Fixed-order pairwise reduction over axis 0 (adjacent pairing)."""
    while arrs.shape[0] > 1:
        m = arrs.shape[0] // 2
        head = arrs[: 2 * m : 2] + arrs[1 : 2 * m : 2]
        if arrs.shape[0] % 2:
            head = np.concatenate([head, arrs[-1:]], axis=0)
        arrs = head
    return arrs[0]


def aggregate(stats: Sequence[SuffStats], M: int | None = None, T: float | None = None) -> ClassStats:
    """Arithmetic means of G and b over paths.

    The mean is bitwise independent of input order: per-path stats are sorted
    by a canonical content key before the pairwise tree sum. An empty input
    yields the flagged zero aggregate (the convention for n_k = 0).
    """
    stats = list(stats)
    if not stats:
        if M is None:
            raise ValueError("M is required for an empty aggregate")
        return ClassStats(M=M, T=float(T) if T is not None else float("nan"), n_k=0,
                          G_bar=np.zeros((M + 1, M + 1)), b_bar=np.zeros((M, M + 1)), paths=())
    M0 = stats[0].M
    if any(s.M != M0 for s in stats) or (M is not None and M != M0):
        raise ValueError("mixed dimensions")
    order = sorted(range(len(stats)),
                   key=lambda i: (stats[i].G.tobytes(), stats[i].b.tobytes()))
    n_k = len(stats)
    G_bar = _tree_sum(np.stack([stats[i].G for i in order])) / n_k
    b_bar = _tree_sum(np.stack([stats[i].b for i in order])) / n_k
    return ClassStats(M=M0, T=stats[0].T, n_k=n_k, G_bar=G_bar, b_bar=b_bar, paths=tuple(stats))


def contrast(cs: ClassStats, theta: ModelParams) -> float:
    """Unpenalized least-squares contrast sum_j theta_j' G theta_j - 2 b_j' theta_j."""
    th = theta.theta
    if th.shape != (cs.M, cs.M + 1):
        raise ValueError("dimension mismatch")
    quad = float(np.einsum("jk,kl,jl->", th, cs.G_bar, th))
    lin = float(np.sum(cs.b_bar * th))
    return quad - 2.0 * lin


def contrast_gradient(cs: ClassStats, theta: ModelParams) -> np.ndarray:
    """Gradient of the contrast, row j = 2 (G_bar theta_j - b_bar_j); shape (M, M+1)."""
    th = theta.theta
    if th.shape != (cs.M, cs.M + 1):
        raise ValueError("dimension mismatch")
    return 2.0 * (th @ cs.G_bar - cs.b_bar)


def log_density_from_stats(stats: SuffStats, params: ModelParams,
                           floor: float = INTENSITY_FLOOR) -> LogDensity:
    """Path log-density evaluated from cached event rows (same math as model.log_density)."""
    rows, comps = stats.stacked_rows()
    return _loglik_from_rows(params.theta, rows, comps, stats.comp, stats.T, floor)

"""Analytic l-bit model for the edge operator ``tau^x_1(t)``.

With ``H = -sum_{j != l} J_jl tau^z_j tau^z_l`` (no onsite terms) the evolved
operator only overlaps strings with ``tau^x`` or ``tau^y`` on site 1 and
``1``/``tau^z`` elsewhere. Their normalized squared amplitudes factorize into
independent site weights ``p_j = sin^2(2 J_j1 t)`` for ``tau^z`` and
``q_j = 1 - p_j`` for the identity, which gives O(L) observables.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.stats import linregress

from .dynamics import make_rng

SATURATION_FRACTION = 0.8


@dataclass(frozen=True)
class LBitParams:
    L: int
    kappa: float
    W: float = 1.0

    def __post_init__(self) -> None:
        if self.L < 2:
            raise ValueError("need at least two sites")
        if self.kappa <= 0 or self.W <= 0:
            raise ValueError("kappa and W must be positive")


@dataclass(frozen=True)
class LBitRealization:
    couplings: np.ndarray  # J_{j1} for j = 2..L
    seed: int


def sample_couplings(params: LBitParams, seed: int) -> LBitRealization:
    dist = np.arange(1, params.L)
    w = make_rng(seed).uniform(-params.W, params.W, size=params.L - 1)
    return LBitRealization(w * np.exp(-params.kappa * dist), int(seed))


def site_flip_probabilities(r: LBitRealization, t) -> np.ndarray:
    """``p_j = sin^2(2 J_j1 t)`` for ``j = 2..L``; a leading time axis if ``t`` is an array."""
    t = np.asarray(t, dtype=float)
    return np.sin(2.0 * np.multiply.outer(t, r.couplings)) ** 2


def _mean_length_from_p(p: np.ndarray) -> np.ndarray:
    """``h = prod q + sum_l l p_l prod_{j>l} q_j`` along the last axis (sites 2..L)."""
    q = 1.0 - p
    # tail[..., k] = prod of q over sites after position k
    tail = np.cumprod(q[..., ::-1], axis=-1)[..., ::-1]
    after = np.concatenate([tail[..., 1:], np.ones(p.shape[:-1] + (1,))], axis=-1)
    sites = np.arange(2, p.shape[-1] + 2)
    return tail[..., 0] + np.sum(sites * p * after, axis=-1)


def lbit_mean_length(r: LBitRealization, t):
    h = _mean_length_from_p(site_flip_probabilities(r, t))
    return float(h) if np.ndim(t) == 0 else h


def lbit_mean_mass(r: LBitRealization, t):
    m = 1.0 + np.sum(site_flip_probabilities(r, t), axis=-1)
    return float(m) if np.ndim(t) == 0 else m


def lbit_length_distribution(r: LBitRealization, t: float) -> np.ndarray:
    """``P(l)`` for ``l = 0..L`` at a single time."""
    p = site_flip_probabilities(r, t)
    q = 1.0 - p
    tail = np.cumprod(q[::-1])[::-1]
    after = np.append(tail[1:], 1.0)
    probs = np.zeros(len(p) + 2)
    probs[1] = tail[0]
    probs[2:] = p * after
    return probs


def enumerate_amplitudes(r: LBitRealization, t: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Brute-force reference: raw amplitudes of every contributing string.

    Returns ``(patterns, amp_x, amp_y)`` where ``patterns[k]`` marks the
    ``tau^z`` sites among ``2..L`` and ``amp_x``/``amp_y`` are the traces
    against the strings carrying ``tau^x``/``tau^y`` on site 1, built from the
    two-product expressions before any parity simplification.
    """
    n = len(r.couplings)
    L = n + 1
    c = np.cos(2 * r.couplings * t)
    s = np.sin(2 * r.couplings * t)
    patterns = np.array(list(itertools.product((0, 1), repeat=n)), dtype=bool).reshape(-1, n)
    plus = np.prod(np.where(patterns, 1j * s, c), axis=1)
    minus = np.prod(np.where(patterns, -1j * s, c), axis=1)
    scale = 2.0 ** (L - 1)
    amp_x = scale * (plus + minus)
    amp_y = -1j * scale * (plus - minus)
    return patterns, amp_x, amp_y


def brute_force_observables(r: LBitRealization, t: float) -> tuple[float, float]:
    """``(h, m)`` from :func:`enumerate_amplitudes`, normalized by the total weight."""
    patterns, ax, ay = enumerate_amplitudes(r, t)
    w = np.abs(ax) ** 2 + np.abs(ay) ** 2
    n = patterns.shape[1]
    sites = np.arange(2, n + 2)
    h = np.maximum(1, np.max(np.where(patterns, sites, 0), axis=1))
    m = 1 + patterns.sum(axis=1)
    total = w.sum()
    return float(np.dot(w, h) / total), float(np.dot(w, m) / total)


def default_slope_grid() -> np.ndarray:
    return np.logspace(0.0, 8.0, 8 * 24 + 1)


def averaged_length(
    params: LBitParams, n_realizations: int, t_grid: np.ndarray, base_seed: int = 0
) -> np.ndarray:
    """Per-realization ``h(t)``, shape ``(n_realizations, len(t_grid))``."""
    out = np.empty((n_realizations, len(t_grid)))
    for k in range(n_realizations):
        out[k] = lbit_mean_length(sample_couplings(params, base_seed + k), t_grid)
    return out


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    stderr: float
    intercept: float
    t_window: tuple[float, float]
    n_points: int


class SaturationError(ValueError):
    """The requested fit window reaches the finite-size saturation regime."""


def fit_log_slope(t: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Least-squares ``y = a ln t + b``; returns ``(a, stderr(a), b)``."""
    res = linregress(np.log(t), y)
    return float(res.slope), float(res.stderr), float(res.intercept)


def lbit_growth_slope(
    params: LBitParams,
    n_realizations: int,
    t_grid: np.ndarray | None = None,
    fit_window: tuple[float, float] | None = None,
    base_seed: int = 0,
) -> SlopeFit:
    """Slope of the disorder-averaged ``h(t)`` against ``ln t``.

    Without an explicit window the fit runs over ``[10, t_sat / 3]``, where
    ``t_sat`` is the first grid time with ``h > 0.8 L``.
    """
    t_grid = default_slope_grid() if t_grid is None else np.asarray(t_grid, dtype=float)
    hbar = averaged_length(params, n_realizations, t_grid, base_seed).mean(axis=0)
    limit = SATURATION_FRACTION * params.L
    if fit_window is None:
        over = np.nonzero(hbar > limit)[0]
        t_sat = t_grid[over[0]] if len(over) else np.inf
        fit_window = (10.0, t_sat / 3)
    lo, hi = fit_window
    mask = (t_grid >= lo) & (t_grid <= hi)
    if mask.sum() < 3:
        raise ValueError(f"fit window {fit_window} holds fewer than 3 grid points")
    if np.any(hbar[mask] >= limit):
        raise SaturationError(f"h reaches {limit:g} inside the fit window {fit_window}")
    slope, err, icpt = fit_log_slope(t_grid[mask], hbar[mask])
    return SlopeFit(slope, err, icpt, (float(t_grid[mask][0]), float(t_grid[mask][-1])), int(mask.sum()))

"""Experiment orchestration: disorder sweeps, averaging and CSV output.

Realization ``r`` always uses seed ``base_seed + r`` and results are reduced
in realization order, so outputs do not depend on worker scheduling.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import trapezoid

from . import __version__
from .dynamics import (
    RNG_NAME,
    EvolutionConfig,
    TruncationBudgetExceeded,
    XXZParams,
    evolve,
    initial_operator,
    log_time_grid,
    sample_disorder,
    window_time_grid,
)
from .lbit import LBitParams, fit_log_slope, lbit_growth_slope, lbit_mean_length, lbit_mean_mass, sample_couplings

log = logging.getLogger(__name__)

MODES = ("evolve", "ed", "lbit", "shadows")
SERIES_COLUMNS = (
    "t", "h_mean", "h_stderr", "m_mean", "m_stderr",
    "e2_mean", "e2_stderr", "chi_max_mean", "discarded_mean",
)


class ExperimentFailed(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    mode: str = "evolve"
    # model
    L: int = 12
    delta: float = 1.0
    W: float = 6.5
    J: float = 1.0
    kappa: float = 1.0
    # time grid
    t_max: float = 100.0
    t_min: float = 0.1
    per_decade: int = 48
    window_grid: bool = False
    times: list[float] | None = None
    # evolution
    dt: float = 0.05
    trotter_order: int = 2
    cutoff: float = 1e-12
    chi_max: int | None = 256
    fail_threshold: float | None = 1e-4
    abort_on_fail: bool = True
    # ensemble
    n_realizations: int = 1
    base_seed: int = 0
    workers: int = 1
    abort_fraction: float = 0.05
    # shadows
    n_shots: int = 10000
    # output
    output_dir: str = "runs/out"
    emit_distributions: bool = False
    keep_raw: bool = True

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.n_realizations < 1:
            raise ValueError("n_realizations must be >= 1")

    def sample_times(self) -> np.ndarray:
        if self.times is not None:
            t = np.unique(np.asarray(self.times, dtype=float))
        else:
            t = log_time_grid(self.t_max, self.per_decade, self.t_min)
        if self.window_grid:
            t = np.unique(np.concatenate([t, window_time_grid(self.L)]))
        return t[t <= self.t_max + 1e-12]

    def evolution_config(self) -> EvolutionConfig:
        return EvolutionConfig(
            t_max=self.t_max, dt=self.dt, trotter_order=self.trotter_order,
            sample_times=self.sample_times(), cutoff=self.cutoff, chi_max=self.chi_max,
            fail_threshold=self.fail_threshold, abort_on_fail=self.abort_on_fail,
            record_distributions=self.emit_distributions,
        )


# -- config file parsing ---------------------------------------------------------------

def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional(conv):
    def parse(text: str):
        return None if text.strip().lower() in ("none", "") else conv(text)
    return parse


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.replace(",", " ").split()]


_PARSERS = {
    "int": int, "float": float, "str": str, "bool": _parse_bool,
    "int | None": _optional(int), "float | None": _optional(float),
    "list[float] | None": _optional(_float_list),
}


def config_field_parsers() -> dict[str, object]:
    return {f.name: _PARSERS[f.type] for f in dataclasses.fields(ExperimentConfig)}


def read_config_file(path: str | Path) -> dict[str, object]:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    parsers = config_field_parsers()
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in parsers:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = parsers[key](val)
    return values


# -- per-realization workers -----------------------------------------------------------

@dataclass
class RealizationResult:
    index: int
    seed: int
    times: np.ndarray
    h: np.ndarray
    m: np.ndarray
    e2: np.ndarray
    chi: np.ndarray
    discarded: np.ndarray
    length_dists: np.ndarray | None = None
    mass_dists: np.ndarray | None = None
    flags: list[str] = field(default_factory=list)
    error: str | None = None


def _run_evolve(cfg: ExperimentConfig, r: int, seed: int) -> RealizationResult:
    params = XXZParams(cfg.L, cfg.delta, cfg.W, cfg.J)
    ts = evolve(initial_operator(cfg.L), params, sample_disorder(params, seed), cfg.evolution_config())
    return RealizationResult(r, seed, ts.times, ts.h, ts.m, ts.integrated_renyi2,
                             ts.chi.astype(float), ts.discarded, ts.length_dists, ts.mass_dists, ts.flags)


def _run_ed(cfg: ExperimentConfig, r: int, seed: int) -> RealizationResult:
    from . import ed
    from .pauli import L_DENSE_MAX, L_ENUM_MAX, dense_to_choi

    params = XXZParams(cfg.L, cfg.delta, cfg.W, cfg.J)
    sd = ed.spectral_decomposition(ed.dense_hamiltonian(params, sample_disorder(params, seed)))
    o = ed.initial_dense_operator(cfg.L)
    times = cfg.sample_times()
    T, L = len(times), cfg.L
    h, m, e2, chi = (np.full(T, np.nan) for _ in range(4))
    ld = np.full((T, L + 1), np.nan) if cfg.emit_distributions else None
    md = np.full((T, L + 1), np.nan) if cfg.emit_distributions else None
    for k, ot in enumerate(ed.evolve_exact_series(o, sd, times)):
        if L <= L_ENUM_MAX:
            em = ed.exact_marginals(ot)
            h[k], m[k] = em.h, em.m
            if ld is not None:
                ld[k], md[k] = em.length.probs, em.mass.probs
        else:
            h[k] = ed.length_distribution_partial_trace(ot).mean
        if L <= L_DENSE_MAX:
            v = dense_to_choi(ot)
            v /= np.linalg.norm(v)
            _, r2 = ed.choi_entanglement(v)
            e2[k] = r2.sum()
            chi[k] = max(_schmidt_rank(v, l, cfg.cutoff) for l in range(1, L))
    return RealizationResult(r, seed, times, h, m, e2, chi, np.zeros(T), ld, md)


def _schmidt_rank(v: np.ndarray, bond: int, cutoff: float) -> int:
    s = np.linalg.svd(v.reshape(4**bond, -1), compute_uv=False)
    w = s * s / np.dot(s, s)
    return int(np.count_nonzero(w >= cutoff)) if cutoff > 0 else len(s)


def _run_lbit(cfg: ExperimentConfig, r: int, seed: int) -> RealizationResult:
    from .lbit import lbit_length_distribution

    params = LBitParams(cfg.L, cfg.kappa, cfg.W)
    rz = sample_couplings(params, seed)
    times = cfg.sample_times()
    T = len(times)
    ld = md = None
    if cfg.emit_distributions:
        ld = np.array([lbit_length_distribution(rz, t) for t in times])
        md = np.array([_lbit_mass_distribution(rz, t) for t in times])
    return RealizationResult(r, seed, times, lbit_mean_length(rz, times), lbit_mean_mass(rz, times),
                             np.full(T, np.nan), np.full(T, np.nan), np.zeros(T), ld, md)


def _lbit_mass_distribution(rz, t: float) -> np.ndarray:
    """Poisson-binomial distribution of ``1 + sum_j Bernoulli(p_j)``."""
    from .lbit import site_flip_probabilities

    probs = np.array([0.0, 1.0])
    for p in site_flip_probabilities(rz, t):
        probs = np.append(probs * (1 - p), 0.0) + np.concatenate([[0.0], probs * p])
    return probs


def _run_shadows(cfg: ExperimentConfig, r: int, seed: int) -> RealizationResult:
    from . import ed, shadows

    params = XXZParams(cfg.L, cfg.delta, cfg.W, cfg.J)
    sd = ed.spectral_decomposition(ed.dense_hamiltonian(params, sample_disorder(params, seed)))
    o = ed.initial_dense_operator(cfg.L)
    times = cfg.sample_times()
    T, L = len(times), cfg.L
    h, m = np.empty(T), np.empty(T)
    ld, md = np.empty((T, L + 1)), np.empty((T, L + 1))
    out = Path(cfg.output_dir)
    for k, (t, ot) in enumerate(zip(times, ed.evolve_exact_series(o, sd, times))):
        state = shadows.choi_state_of(ot)
        snaps = shadows.shadow_protocol(state, cfg.n_shots, seed=_shot_seed(seed, k))
        est = shadows.estimate_marginals(snaps)
        h[k], m[k] = est.length.mean, est.mass.mean
        ld[k], md[k] = est.length.probs, est.mass.probs
        if cfg.keep_raw:
            shadows.write_snapshots(snaps, out / f"snapshots_r{r}_t{_tlabel(t)}.csv")
    nan = np.full(T, np.nan)
    return RealizationResult(r, seed, times, h, m, nan, nan.copy(), np.zeros(T), ld, md)


def _shot_seed(seed: int, k: int) -> int:
    # disjoint from disorder seeds for any realistic ensemble size
    return (seed + 1) * 1_000_003 + k


_RUNNERS = {"evolve": _run_evolve, "ed": _run_ed, "lbit": _run_lbit, "shadows": _run_shadows}


def run_realization(cfg: ExperimentConfig, r: int) -> RealizationResult:
    seed = cfg.base_seed + r
    try:
        return _RUNNERS[cfg.mode](cfg, r, seed)
    except TruncationBudgetExceeded as exc:
        return RealizationResult(r, seed, np.empty(0), *(np.empty(0) for _ in range(5)), error=str(exc))


# -- averaging and output --------------------------------------------------------------

@dataclass
class AveragedSeries:
    times: np.ndarray
    mean: dict[str, np.ndarray]
    stderr: dict[str, np.ndarray]
    n_realizations: int
    aborted: list[int] = field(default_factory=list)


def _stderr(x: np.ndarray) -> np.ndarray:
    n = x.shape[0]
    if n < 2:
        return np.zeros(x.shape[1:])
    return np.std(x, axis=0, ddof=1) / math.sqrt(n)


def average_results(results: list[RealizationResult]) -> AveragedSeries:
    ok = [res for res in results if res.error is None]
    if not ok:
        raise ExperimentFailed("every realization aborted")
    times = ok[0].times
    mean, err = {}, {}
    for key in ("h", "m", "e2", "chi", "discarded"):
        stack = np.array([getattr(res, key) for res in ok])
        mean[key] = stack.mean(axis=0)
        err[key] = _stderr(stack)
    for key in ("length_dists", "mass_dists"):
        if ok[0].length_dists is not None:
            mean[key] = np.mean([getattr(res, key) for res in ok], axis=0)
    aborted = [res.index for res in results if res.error is not None]
    return AveragedSeries(times, mean, err, len(ok), aborted)


def _fmt(x: float) -> str:
    return "nan" if np.isnan(x) else repr(float(x))


def _tlabel(t: float) -> str:
    return f"{t:.6g}"


def write_series(avg: AveragedSeries, path: Path) -> None:
    rows = [",".join(SERIES_COLUMNS)]
    for k, t in enumerate(avg.times):
        vals = [t, avg.mean["h"][k], avg.stderr["h"][k], avg.mean["m"][k], avg.stderr["m"][k],
                avg.mean["e2"][k], avg.stderr["e2"][k], avg.mean["chi"][k], avg.mean["discarded"][k]]
        rows.append(",".join(_fmt(v) for v in vals))
    path.write_text("\n".join(rows) + "\n")


def read_series(path: str | Path) -> dict[str, np.ndarray]:
    data = np.genfromtxt(path, delimiter=",", names=True)
    return {name: np.atleast_1d(data[name]) for name in data.dtype.names}


def write_distributions(avg: AveragedSeries, L: int, out: Path) -> None:
    header = "t,kind," + ",".join(f"p{l}" for l in range(L + 1))
    for kind, key in (("length", "length_dists"), ("mass", "mass_dists")):
        if key not in avg.mean:
            continue
        for k, t in enumerate(avg.times):
            row = ",".join([_fmt(t), kind] + [_fmt(p) for p in avg.mean[key][k]])
            (out / f"dist_{kind}_{_tlabel(t)}.csv").write_text(f"{header}\n{row}\n")


def write_raw(results: list[RealizationResult], path: Path) -> None:
    rows = ["realization,seed,t,h,m,e2,chi,discarded"]
    for res in results:
        if res.error is not None:
            continue
        for k, t in enumerate(res.times):
            rows.append(",".join([str(res.index), str(res.seed)] + [
                _fmt(v) for v in (t, res.h[k], res.m[k], res.e2[k], res.chi[k], res.discarded[k])]))
    path.write_text("\n".join(rows) + "\n")


def manifest(cfg: ExperimentConfig, results: list[RealizationResult]) -> dict:
    return {
        "package": "opspread",
        "version": __version__,
        "numpy": np.__version__,
        "rng": RNG_NAME,
        "config": dataclasses.asdict(cfg),
        "seeds": [cfg.base_seed + r for r in range(cfg.n_realizations)],
        "aborted": {str(res.index): res.error for res in results if res.error is not None},
        "flags": {str(res.index): res.flags for res in results if res.flags},
    }


def run_experiment(cfg: ExperimentConfig, order: list[int] | None = None) -> AveragedSeries:
    """Run every realization, write outputs to ``cfg.output_dir`` and return the averages.

    ``order`` permutes execution order only; results are always reduced in
    realization order.
    """
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    indices = list(range(cfg.n_realizations)) if order is None else list(order)
    if sorted(indices) != list(range(cfg.n_realizations)):
        raise ValueError("order must be a permutation of the realization indices")
    if cfg.workers > 1 and len(indices) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            done = list(pool.map(run_realization, [cfg] * len(indices), indices))
    else:
        done = [run_realization(cfg, r) for r in indices]
    results = sorted(done, key=lambda res: res.index)
    for res in results:
        if res.error is not None:
            log.warning("realization %d aborted: %s", res.index, res.error)
    (out / "manifest.json").write_text(json.dumps(manifest(cfg, results), indent=2, sort_keys=True) + "\n")
    n_abort = sum(res.error is not None for res in results)
    if n_abort > cfg.abort_fraction * cfg.n_realizations:
        raise ExperimentFailed(f"{n_abort} of {cfg.n_realizations} realizations aborted")
    avg = average_results(results)
    write_series(avg, out / "series.csv")
    if cfg.keep_raw:
        write_raw(results, out / "raw.csv")
    if cfg.emit_distributions:
        write_distributions(avg, cfg.L, out)
    return avg


# -- post-processing -------------------------------------------------------------------

def window_average(times: np.ndarray, values: np.ndarray, L: float) -> float:
    """``(1/L) * integral_0^L values dt`` by the trapezoidal rule on the sampled grid."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times[0] > 0 or times[-1] < L:
        raise ValueError(f"time grid [{times[0]}, {times[-1]}] does not cover [0, {L}]")
    inside = times <= L
    t = times[inside]
    v = values[inside]
    if t[-1] < L:
        t = np.append(t, L)
        v = np.append(v, np.interp(L, times, values))
    return float(trapezoid(v, t) / L)


def rescale_by_logL(values, Ls) -> np.ndarray:
    Ls = np.asarray(Ls, dtype=float)
    if np.any(Ls < 2):
        raise ValueError("system sizes must be >= 2")
    return np.asarray(values, dtype=float) / np.log(Ls)


def slope_table(
    kappas, L: int = 64, W: float = 1.0, n_realizations: int = 192, base_seed: int = 0
) -> list[tuple[float, float, float, int]]:
    rows = []
    for kappa in kappas:
        fit = lbit_growth_slope(LBitParams(L, kappa, W), n_realizations, base_seed=base_seed)
        rows.append((float(kappa), fit.slope, fit.stderr, n_realizations))
    return rows


def series_log_slope(series: dict[str, np.ndarray], t_lo: float, t_hi: float, column: str = "h_mean"):
    t = series["t"]
    mask = (t >= t_lo) & (t <= t_hi) & (t > 0)
    if mask.sum() < 3:
        raise ValueError("fewer than 3 samples inside the fit window")
    return fit_log_slope(t[mask], series[column][mask])

"""Heisenberg-picture TEBD for the disordered XXZ chain.

    H = sum_j [J/2 (s+_j s-_{j+1} + h.c.) + Delta/4 sz_j sz_{j+1}] + sum_j h_j/2 sz_j

with open boundaries and ``h_j`` uniform in ``[-W, W]``. An operator evolves
as ``O(t) = exp(iHt) O exp(-iHt)``; on the Pauli-amplitude vector each
two-site factor acts as a real orthogonal 16x16 matrix.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from .marginals import (
    entanglement_profile,
    length_distribution,
    mass_distribution,
    mean_length,
    mean_mass,
)
from .mps import (
    DEFAULT_CHI_MAX,
    DEFAULT_CUTOFF,
    OperatorMPS,
    apply_two_site_gate,
    canonicalize,
    check_orthogonal,
    product_operator_mps,
)
from .pauli import Z, normalized_pauli_matrix, pauli_matrix

RNG_NAME = "numpy.random.Philox"
REALNESS_TOL = 1e-10


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator used for every random draw in the package."""
    return np.random.Generator(np.random.Philox(int(seed)))


@dataclass(frozen=True)
class XXZParams:
    L: int
    delta: float
    W: float
    J: float = 1.0

    def __post_init__(self) -> None:
        if self.L < 2:
            raise ValueError("need at least two sites")
        if self.W < 0:
            raise ValueError("disorder strength must be non-negative")


@dataclass(frozen=True)
class DisorderRealization:
    fields: np.ndarray
    seed: int


class TruncationBudgetExceeded(RuntimeError):
    """Cumulative discarded weight passed the configured failure threshold."""


def sample_disorder(params: XXZParams, seed: int) -> DisorderRealization:
    fields = make_rng(seed).uniform(-params.W, params.W, size=params.L)
    return DisorderRealization(fields, int(seed))


_SP = np.array([[0, 1], [0, 0]], dtype=np.complex128)  # sigma^+ = |0><1|


def bond_hamiltonian(params: XXZParams, realization: DisorderRealization, j: int) -> np.ndarray:
    """4x4 term for bond ``(j, j+1)`` (0-based) including its share of the onsite fields.

    Interior sites give half of their field to each adjacent bond, the two
    boundary sites give all of it to their single bond.
    """
    L = params.L
    if not 0 <= j < L - 1:
        raise ValueError(f"bond {j} out of range 0..{L - 2}")
    sz = pauli_matrix(Z)
    eye = np.eye(2)
    hop = np.kron(_SP, _SP.conj().T)
    h = params.J / 2 * (hop + hop.conj().T) + params.delta / 4 * np.kron(sz, sz)
    w_left = 1.0 if j == 0 else 0.5
    w_right = 1.0 if j + 1 == L - 1 else 0.5
    h_left, h_right = realization.fields[j], realization.fields[j + 1]
    h = h + w_left * h_left / 2 * np.kron(sz, eye) + w_right * h_right / 2 * np.kron(eye, sz)
    return h


_TWO_SITE_BASIS = np.array(
    [np.kron(normalized_pauli_matrix(a), normalized_pauli_matrix(b)) for a in range(4) for b in range(4)]
)


def adjoint_gate(bond_h: np.ndarray, dt: float) -> np.ndarray:
    """Real 16x16 matrix of ``O -> U O U^dagger`` with ``U = exp(i dt bond_h)``.

    ``G[nu, mu] = Tr[P_nu U P_mu U^dagger]`` in the two-site normalized Pauli basis.
    """
    if np.max(np.abs(bond_h - bond_h.conj().T)) > 1e-12:
        raise ValueError("bond Hamiltonian is not Hermitian")
    e, v = np.linalg.eigh(bond_h)
    u = (v * np.exp(1j * dt * e)) @ v.conj().T
    conj = np.einsum("ij,mjk,lk->mil", u, _TWO_SITE_BASIS, u.conj(), optimize=True)
    g = np.einsum("nij,mji->nm", _TWO_SITE_BASIS, conj, optimize=True)
    if np.max(np.abs(g.imag)) > REALNESS_TOL:
        raise ValueError("adjoint gate has an imaginary part")
    g = np.ascontiguousarray(g.real)
    check_orthogonal(g)
    return g


def log_time_grid(t_max: float, per_decade: int = 48, t_min: float = 0.1) -> np.ndarray:
    """``0`` plus points ``10**(k/per_decade)`` in ``[t_min, t_max]``, plus ``t_max``."""
    k_lo = math.ceil(per_decade * math.log10(t_min) - 1e-9)
    k_hi = math.floor(per_decade * math.log10(t_max) + 1e-9)
    pts = 10.0 ** (np.arange(k_lo, k_hi + 1) / per_decade)
    return np.unique(np.concatenate([[0.0], pts, [t_max]]))


def window_time_grid(L: int, points_per_unit: int = 8) -> np.ndarray:
    """Linear grid on ``[0, L]`` for time-window averages."""
    return np.linspace(0.0, float(L), points_per_unit * L + 1)


@dataclass
class EvolutionConfig:
    t_max: float
    dt: float = 0.05
    trotter_order: int = 2
    sample_times: np.ndarray | None = None
    cutoff: float = DEFAULT_CUTOFF
    chi_max: int | None = DEFAULT_CHI_MAX
    fail_threshold: float | None = 1e-4
    abort_on_fail: bool = True
    record_distributions: bool = False

    def __post_init__(self) -> None:
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.trotter_order not in (1, 2, 4):
            raise ValueError("trotter_order must be 1, 2 or 4")
        if self.sample_times is None:
            self.sample_times = log_time_grid(self.t_max)
        times = np.asarray(self.sample_times, dtype=float)
        if np.any(np.diff(times) <= 0) or times[0] < 0 or times[-1] > self.t_max + 1e-12:
            raise ValueError("sample_times must be sorted, distinct and inside [0, t_max]")
        self.sample_times = times


@dataclass
class TimeSeries:
    times: np.ndarray
    h: np.ndarray
    m: np.ndarray
    vn: np.ndarray  # (T, L-1)
    renyi2: np.ndarray  # (T, L-1)
    chi: np.ndarray
    discarded: np.ndarray  # cumulative
    length_dists: np.ndarray | None = None
    mass_dists: np.ndarray | None = None
    flags: list[str] = field(default_factory=list)

    @property
    def integrated_renyi2(self) -> np.ndarray:
        return self.renyi2.sum(axis=1)


class _GateCache:
    """Adjoint gates per (bond, step) for one realization."""

    def __init__(self, params: XXZParams, realization: DisorderRealization):
        self.bond_h = [bond_hamiltonian(params, realization, j) for j in range(params.L - 1)]
        self._gates: dict[tuple[int, float], np.ndarray] = {}

    def __call__(self, j: int, dt: float) -> np.ndarray:
        key = (j, dt)
        g = self._gates.get(key)
        if g is None:
            g = self._gates[key] = adjoint_gate(self.bond_h[j], dt)
        return g


# Suzuki's fourth-order composition of five Strang steps
_SUZUKI_P = 1.0 / (4.0 - 4.0 ** (1.0 / 3.0))


def layer_schedule(order: int, n: int, dt: float) -> list[tuple[str, float]]:
    """Sequence of ``("full" | "half", step)`` layers for ``n`` steps of size ``dt``.

    Adjacent layers on the same bond set commute and are merged. Order 2 is
    Strang splitting (half-full-half); order 4 composes five Strang steps.
    """
    if order == 1:
        raw = [("full", dt), ("half", dt)] * n
    elif order == 2:
        raw = [("half", dt / 2), ("full", dt), ("half", dt / 2)] * n
    elif order == 4:
        p = _SUZUKI_P
        subs = [p, p, 1 - 4 * p, p, p]
        raw = [item for _ in range(n) for a in subs
               for item in (("half", a * dt / 2), ("full", a * dt), ("half", a * dt / 2))]
    else:
        raise ValueError(f"unsupported Trotter order {order}")
    merged: list[tuple[str, float]] = []
    for kind, step in raw:
        if merged and merged[-1][0] == kind:
            merged[-1] = (kind, merged[-1][1] + step)
        else:
            merged.append((kind, step))
    return merged


class _Stepper:
    def __init__(self, mps, gates, cfg: EvolutionConfig, monitor=None):
        self.mps = mps
        self.gates = gates
        self.cfg = cfg
        self.monitor = monitor
        self.discarded = 0.0
        L = mps.L
        # 0-based bonds (0, 2, ...) form the "full" layer, (1, 3, ...) the "half" layer
        self.bonds = {"full": list(range(0, L - 1, 2)), "half": list(range(1, L - 1, 2))}
        self._rightward = True

    def layer(self, bonds: list[int], dt: float) -> None:
        if not bonds:
            return
        order = bonds if self._rightward else bonds[::-1]
        move = "right" if self._rightward else "left"
        for j in order:
            _, rep = apply_two_site_gate(
                self.mps, self.gates(j, dt), j, self.cfg.cutoff, self.cfg.chi_max,
                move=move, inplace=True, check=False,
            )
            self.discarded += rep.discarded_weight
        self._rightward = not self._rightward
        if self.monitor is not None:
            self.monitor(self.mps)

    def advance(self, n: int, dt: float) -> None:
        for kind, step in layer_schedule(self.cfg.trotter_order, n, dt):
            self.layer(self.bonds[kind], step)


def initial_operator(L: int) -> OperatorMPS:
    """``sigma^z`` on the first site, identity elsewhere (unit-normalized)."""
    return product_operator_mps([Z] + [0] * (L - 1))


def evolve(
    mps: OperatorMPS,
    params: XXZParams,
    realization: DisorderRealization,
    cfg: EvolutionConfig,
    monitor: Callable[[OperatorMPS], None] | None = None,
) -> TimeSeries:
    """Evolve ``mps`` and record observables at every ``cfg.sample_times`` entry.

    ``monitor`` (if given) sees the working state after every gate layer; it
    must not modify it.
    """
    if mps.L != params.L:
        raise ValueError("operator and Hamiltonian sizes differ")
    stepper = _Stepper(mps.copy(), _GateCache(params, realization), cfg, monitor)
    L = params.L
    times = cfg.sample_times
    T = len(times)
    rec = {
        "h": np.empty(T), "m": np.empty(T), "vn": np.empty((T, L - 1)),
        "renyi2": np.empty((T, L - 1)), "chi": np.empty(T, dtype=int), "discarded": np.empty(T),
    }
    ldist = np.empty((T, L + 1)) if cfg.record_distributions else None
    mdist = np.empty((T, L + 1)) if cfg.record_distributions else None
    flags: list[str] = []
    t_now = 0.0
    for k, t in enumerate(times):
        gap = t - t_now
        if gap > 0:
            n = max(1, math.ceil(gap / cfg.dt - 1e-9))
            stepper.advance(n, gap / n)
            t_now = t
        state = canonicalize(stepper.mps, "left")
        rec["h"][k] = mean_length(state)
        rec["m"][k] = mean_mass(state)
        ent = entanglement_profile(state)
        rec["vn"][k] = ent.vn
        rec["renyi2"][k] = ent.renyi2
        rec["chi"][k] = state.max_bond
        rec["discarded"][k] = stepper.discarded
        if ldist is not None:
            ldist[k] = length_distribution(state).probs
            mdist[k] = mass_distribution(state).probs
        if cfg.fail_threshold is not None and stepper.discarded > cfg.fail_threshold:
            msg = (
                f"cumulative discarded weight {stepper.discarded:.3e} exceeds "
                f"{cfg.fail_threshold:.1e} at t={t:g} (chi={state.max_bond}, chi_max={cfg.chi_max})"
            )
            if cfg.abort_on_fail:
                raise TruncationBudgetExceeded(msg)
            if not flags:
                flags.append(msg)
    return TimeSeries(times.copy(), rec["h"], rec["m"], rec["vn"], rec["renyi2"], rec["chi"],
                      rec["discarded"], ldist, mdist, flags)

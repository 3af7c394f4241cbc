"""Ideal simulation of Bell-basis shadow measurements on the Choi state.

Each site carries a system qubit ``s`` and an ancilla ``a``; the statevector
orders qubits ``s1 a1 s2 a2 ...`` with ``s1`` most significant. Outcomes are
recorded per pair as ``(z_s, z_a)`` after the Bell-reduction circuit
``C^dagger = H_s CNOT_{s->a}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .dynamics import make_rng
from .marginals import MarginalDistribution
from .mps import OperatorMPS, mps_to_choi
from .pauli import LABELS, choi_to_dense, length_table, mass_table, num_sites

L_SHADOW_MAX = 6

_H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)
_S = np.diag([1, 1j])
_CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128)
BELL_REDUCTION = np.kron(_H, np.eye(2)) @ _CNOT  # C^dagger, acting on |z_s z_a>

# Outcome index 2*z_s + z_a -> Pauli code. (sigma (x) 1)|Phi+> gives Phi+ for I,
# Psi+ for X, Psi- for Y and Phi- for Z; C^dagger sends those to 00, 01, 11, 10.
OUTCOME_TO_CODE = np.array([0, 1, 3, 2])


@lru_cache(maxsize=None)
def clifford_group() -> tuple[np.ndarray, ...]:
    """The 24 single-qubit Cliffords modulo phase, generated by H and S."""

    def canon(u: np.ndarray) -> np.ndarray:
        k = np.flatnonzero(np.abs(u.ravel()) > 1e-9)[0]
        z = u.ravel()[k]
        return u * (abs(z) / z)

    def key(u: np.ndarray) -> tuple:
        return tuple(np.round(u.ravel(), 8).view(float))

    found = {key(canon(np.eye(2, dtype=np.complex128))): canon(np.eye(2, dtype=np.complex128))}
    frontier = list(found.values())
    while frontier:
        nxt = []
        for u in frontier:
            for g in (_H, _S):
                w = canon(g @ u)
                k = key(w)
                if k not in found:
                    found[k] = w
                    nxt.append(w)
        frontier = nxt
    group = tuple(found[k] for k in sorted(found))
    if len(group) != 24:
        raise RuntimeError(f"Clifford closure produced {len(group)} elements")
    return group


@lru_cache(maxsize=None)
def _pair_readout_unitaries() -> np.ndarray:
    """``C^dagger (R (x) R*)`` for every Clifford ``R``, shape (24, 4, 4)."""
    return np.array([BELL_REDUCTION @ np.kron(r, r.conj()) for r in clifford_group()])


@dataclass(frozen=True)
class ChoiState:
    amplitudes: np.ndarray
    L: int


def choi_state_of(op) -> ChoiState:
    """Doubled state ``(O (x) 1)|Phi+>^L`` (unit norm) of a dense operator or operator MPS."""
    if isinstance(op, OperatorMPS):
        if op.L > L_SHADOW_MAX:
            raise ValueError(f"L={op.L} exceeds statevector limit {L_SHADOW_MAX}")
        op = choi_to_dense(mps_to_choi(op))
    o = np.asarray(op, dtype=np.complex128)
    L = num_sites(o)
    if L > L_SHADOW_MAX:
        raise ValueError(f"L={L} exceeds statevector limit {L_SHADOW_MAX}")
    # psi[system, ancilla] = O[system, ancilla]; interleave to s1 a1 s2 a2 ...
    t = o.reshape((2,) * (2 * L))
    order = [k for j in range(L) for k in (j, L + j)]
    psi = t.transpose(order).reshape(-1)
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise ValueError("zero operator has no Choi state")
    return ChoiState(psi / norm, L)


def _apply_pairs(psi: np.ndarray, mats: np.ndarray, L: int) -> np.ndarray:
    """Apply per-pair 4x4 matrices; ``psi`` is ``(B, 4**L)``, ``mats`` is ``(B, L, 4, 4)``."""
    B = psi.shape[0]
    t = psi.reshape((B,) + (4,) * L)
    for i in range(L):
        t = np.moveaxis(t, i + 1, -1)
        shape = t.shape
        t = np.matmul(t.reshape(B, -1, 4), np.transpose(mats[:, i], (0, 2, 1))).reshape(shape)
        t = np.moveaxis(t, -1, i + 1)
    return t.reshape(B, -1)


def apply_pair_cliffords(state: ChoiState, indices) -> ChoiState:
    """Apply ``R_i (x) R_i*`` on every pair, with ``R_i = clifford_group()[indices[i]]``."""
    group = clifford_group()
    mats = np.array([[np.kron(group[k], group[k].conj()) for k in indices]])
    psi = _apply_pairs(state.amplitudes[None, :], mats, state.L)[0]
    return ChoiState(psi, state.L)


def apply_random_pair_cliffords(state: ChoiState, seed: int) -> tuple[ChoiState, np.ndarray]:
    """Uniformly random Clifford pair rotation; returns the state and the drawn indices."""
    idx = make_rng(seed).integers(0, 24, size=state.L)
    return apply_pair_cliffords(state, idx), idx


def bell_probabilities(state: ChoiState) -> np.ndarray:
    """Exact outcome probabilities over ``4**L`` readouts, index digits ``2 z_s + z_a``."""
    mats = np.broadcast_to(BELL_REDUCTION, (1, state.L, 4, 4))
    psi = _apply_pairs(state.amplitudes[None, :], mats, state.L)[0]
    return np.abs(psi) ** 2


def _outcome_digits(idx: np.ndarray, L: int) -> np.ndarray:
    shifts = 2 * np.arange(L - 1, -1, -1)
    return (idx[:, None] >> shifts[None, :]) & 3


def outcome_code_table(L: int) -> np.ndarray:
    """Decoded Pauli codes for every readout index, shape ``(4**L, L)``."""
    return OUTCOME_TO_CODE[_outcome_digits(np.arange(4**L), L)]


def exact_state_marginals(state: ChoiState) -> tuple[np.ndarray, np.ndarray]:
    """Length and mass marginals implied by the exact Bell-outcome distribution."""
    L = state.L
    p = bell_probabilities(state)
    codes = outcome_code_table(L)
    # map decoded strings to their site-major string index to reuse the tables
    sidx = (codes * (4 ** np.arange(L - 1, -1, -1))).sum(axis=1)
    pl = np.bincount(length_table(L)[sidx], weights=p, minlength=L + 1)
    pm = np.bincount(mass_table(L)[sidx], weights=p, minlength=L + 1)
    return pl, pm


@dataclass(frozen=True)
class ShadowSnapshot:
    bits: tuple[tuple[int, int], ...]
    decoded: tuple[int, ...]


@dataclass(frozen=True)
class ShadowSnapshots:
    """Array-backed collection of shots; ``bits[k, i] = (z_s, z_a)`` of pair ``i``."""

    bits: np.ndarray  # (N, L, 2) uint8
    codes: np.ndarray  # (N, L) int8

    def __len__(self) -> int:
        return len(self.codes)

    def __getitem__(self, k: int) -> ShadowSnapshot:
        return ShadowSnapshot(
            tuple((int(a), int(b)) for a, b in self.bits[k]), tuple(int(c) for c in self.codes[k])
        )

    @property
    def L(self) -> int:
        return self.codes.shape[1]

    @property
    def lengths(self) -> np.ndarray:
        nonid = self.codes != 0
        pos = np.arange(1, self.L + 1)
        return np.max(np.where(nonid, pos, 0), axis=1)

    @property
    def masses(self) -> np.ndarray:
        return np.count_nonzero(self.codes, axis=1)


def _snapshots_from_outcomes(idx: np.ndarray, L: int) -> ShadowSnapshots:
    digits = _outcome_digits(idx, L)
    bits = np.stack([digits >> 1, digits & 1], axis=-1).astype(np.uint8)
    return ShadowSnapshots(bits, OUTCOME_TO_CODE[digits].astype(np.int8))


def bell_sample(state: ChoiState, n_shots: int, seed: int) -> ShadowSnapshots:
    """Sample Bell readouts of a fixed state (no randomizing layer)."""
    p = bell_probabilities(state)
    idx = make_rng(seed).choice(len(p), size=n_shots, p=p / p.sum())
    return _snapshots_from_outcomes(idx, state.L)


def shadow_protocol(
    state: ChoiState, n_shots: int, seed: int, batch: int | None = None
) -> ShadowSnapshots:
    """Full protocol: fresh random ``R (x) R*`` on every pair for every shot, then Bell readout."""
    L = state.L
    rng = make_rng(seed)
    readout = _pair_readout_unitaries()
    batch = batch or max(1, (1 << 20) // 4**L)
    out = []
    done = 0
    while done < n_shots:
        b = min(batch, n_shots - done)
        draws = rng.integers(0, 24, size=(b, L))
        psi = np.broadcast_to(state.amplitudes, (b, state.amplitudes.size))
        p = np.abs(_apply_pairs(psi, readout[draws], L)) ** 2
        cdf = np.cumsum(p, axis=1)
        u = rng.random(b) * cdf[:, -1]
        idx = np.minimum((cdf < u[:, None]).sum(axis=1), 4**L - 1)
        out.append(idx)
        done += b
    return _snapshots_from_outcomes(np.concatenate(out), L)


@dataclass(frozen=True)
class ShadowEstimate:
    length: MarginalDistribution
    length_stderr: np.ndarray
    mass: MarginalDistribution
    mass_stderr: np.ndarray
    n_shots: int


def estimate_marginals(snapshots: ShadowSnapshots) -> ShadowEstimate:
    """Histogram estimators of ``P(l)`` and ``P(m)`` with binomial standard errors."""
    n = len(snapshots)
    if n == 0:
        raise ValueError("no snapshots")
    L = snapshots.L
    pl = np.bincount(snapshots.lengths, minlength=L + 1) / n
    pm = np.bincount(snapshots.masses, minlength=L + 1) / n
    return ShadowEstimate(
        MarginalDistribution("length", pl),
        np.sqrt(pl * (1 - pl) / n),
        MarginalDistribution("mass", pm),
        np.sqrt(pm * (1 - pm) / n),
        n,
    )


def write_snapshots(snapshots: ShadowSnapshots, path: str | Path) -> None:
    """One line per shot: ``shot_index,bitstring,decoded_string,h,m``."""
    bitstrings = ["".join(f"{a}{b}" for a, b in row) for row in snapshots.bits]
    h, m = snapshots.lengths, snapshots.masses
    lines = ["shot_index,bitstring,decoded_string,h,m"]
    for k in range(len(snapshots)):
        decoded = "".join(LABELS[c] for c in snapshots.codes[k])
        lines.append(f"{k},{bitstrings[k]},{decoded},{h[k]},{m[k]}")
    Path(path).write_text("\n".join(lines) + "\n")

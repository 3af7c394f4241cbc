"""Exact length/mass marginals and operator entanglement of an operator MPS.

All functions expect a unit-norm state; the squared amplitudes are then a
probability distribution over Pauli strings.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mps import OperatorMPS, all_schmidt_values, canonicalize

CLIP_TOL = 1e-8
IMAG_TOL = 1e-8


@dataclass(frozen=True)
class MarginalDistribution:
    kind: str  # "length" or "mass"
    probs: np.ndarray

    @property
    def L(self) -> int:
        return len(self.probs) - 1

    @property
    def mean(self) -> float:
        return float(np.dot(np.arange(len(self.probs)), self.probs))


@dataclass(frozen=True)
class EntanglementProfile:
    vn: np.ndarray
    renyi2: np.ndarray

    @property
    def integrated_renyi2(self) -> float:
        return float(np.sum(self.renyi2))


def clip_probabilities(p: np.ndarray, tol: float = CLIP_TOL) -> np.ndarray:
    """Zero small negative entries and renormalize; raise on anything below ``-tol``."""
    p = np.asarray(p, dtype=float)
    if np.any(p < -tol):
        raise ValueError(f"negative probability {p.min():.3e} beyond tolerance")
    p = np.where(p < 0, 0.0, p)
    total = p.sum()
    if total <= 0:
        raise ValueError("distribution has no weight")
    return p / total


def partial_purity_profile(mps: OperatorMPS) -> np.ndarray:
    """Weights ``S2(l)`` of strings supported on the first ``l`` sites, ``l = 0..L``.

    In left-canonical form the block of sites ``1..l`` is an isometry, so
    ``S2(l)`` is the squared norm of the right environment built from the
    identity components of sites ``l+1..L``: one matrix-vector product per site.
    """
    work = mps if mps.canonical == "left" else canonicalize(mps, "left")
    L = work.L
    out = np.empty(L + 1)
    env = np.ones(1)
    out[L] = float(np.sum(work.tensors[-1] ** 2))
    for l in range(L - 1, -1, -1):
        env = work.tensors[l][:, 0, :] @ env
        out[l] = float(np.dot(env, env))
    return out


def length_distribution(mps: OperatorMPS) -> MarginalDistribution:
    s2 = partial_purity_profile(mps)
    probs = np.diff(s2, prepend=0.0)
    return MarginalDistribution("length", clip_probabilities(probs))


def mean_length(mps: OperatorMPS) -> float:
    s2 = partial_purity_profile(mps)
    return float(mps.L - np.sum(s2[:-1]))


def mean_mass(mps: OperatorMPS) -> float:
    """``<O|M|O>`` with the bond-dimension-2 mass MPO.

    Channel 0 carries strings with no mass counted yet, channel 1 accumulates
    the mass of everything to the left.
    """
    env0 = np.ones((1, 1))
    env1 = np.zeros((1, 1))
    for t in mps.tensors:
        t0 = t[:, 0, :]
        tn = t[:, 1:, :]
        id0 = t0.T @ env0 @ t0
        nonid0 = np.einsum("ab,aic,bid->cd", env0, tn, tn, optimize=True)
        env1 = t0.T @ env1 @ t0 + np.einsum("ab,aic,bid->cd", env1, tn, tn, optimize=True) + nonid0
        env0 = id0 + nonid0
    return float(env1[0, 0])


def mass_generating_function(mps: OperatorMPS, lam) -> np.ndarray | complex:
    """``G(lam) = <O| prod_j exp(i lam (1 - |0><0|_j)) |O>``; vectorized over ``lam``."""
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    phase = np.exp(1j * lam_arr)
    env = np.ones((len(lam_arr), 1, 1), dtype=np.complex128)
    for t in mps.tensors:
        t0 = t[:, 0, :]
        tn = t[:, 1:, :]
        env_id = np.einsum("ac,kab,bd->kcd", t0, env, t0, optimize=True)
        env_non = np.einsum("aic,kab,bid->kcd", tn, env, tn, optimize=True)
        env = env_id + phase[:, None, None] * env_non
    g = env[:, 0, 0]
    return complex(g[0]) if np.ndim(lam) == 0 else g


def mass_distribution(mps: OperatorMPS) -> MarginalDistribution:
    """Invert ``G`` at the ``L+1`` roots of unity with a discrete Fourier transform."""
    L = mps.L
    alpha = 2 * np.pi / (L + 1)
    g = mass_generating_function(mps, alpha * np.arange(L + 1))
    p = np.fft.fft(g) / (L + 1)
    if np.max(np.abs(p.imag)) > IMAG_TOL:
        raise ValueError(f"mass distribution has imaginary residue {np.max(np.abs(p.imag)):.2e}")
    return MarginalDistribution("mass", clip_probabilities(p.real))


def entropies_from_schmidt(s: np.ndarray) -> tuple[float, float]:
    """Von Neumann and Renyi-2 entropies (natural log) of a Schmidt spectrum."""
    w = s * s
    w = w[w > 0]
    w = w / w.sum()
    vn = float(-np.sum(w * np.log(w)))
    r2 = float(-np.log(np.sum(w * w)))
    return max(vn, 0.0), max(r2, 0.0)


def entanglement_profile(mps: OperatorMPS) -> EntanglementProfile:
    spectra = all_schmidt_values(mps)
    pairs = [entropies_from_schmidt(s) for s in spectra]
    vn = np.array([p[0] for p in pairs])
    r2 = np.array([p[1] for p in pairs])
    return EntanglementProfile(vn, r2)

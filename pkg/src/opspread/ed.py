"""Exact-diagonalization reference for small chains."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import DisorderRealization, XXZParams
from .marginals import MarginalDistribution, clip_probabilities, entropies_from_schmidt
from .pauli import L_ENUM_MAX, length_table, mass_table, num_sites, pauli_matrix

L_ED_MAX = 12


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def _site_op(op: np.ndarray, j: int, L: int) -> np.ndarray:
    return np.kron(np.kron(np.eye(2**j), op), np.eye(2 ** (L - j - 1)))


def dense_hamiltonian(params: XXZParams, realization: DisorderRealization) -> np.ndarray:
    L = params.L
    if L > L_ED_MAX:
        raise ValueError(f"L={L} exceeds ED limit {L_ED_MAX}")
    x, y, z = (pauli_matrix(c) for c in (1, 2, 3))
    dim = 2**L
    h = np.zeros((dim, dim), dtype=np.complex128)
    for j in range(L - 1):
        for p, coef in ((x, params.J / 4), (y, params.J / 4), (z, params.delta / 4)):
            h += coef * (_site_op(p, j, L) @ _site_op(p, j + 1, L))
    for j in range(L):
        h += realization.fields[j] / 2 * _site_op(z, j, L)
    return h


def spectral_decomposition(h: np.ndarray) -> SpectralDecomposition:
    e, v = np.linalg.eigh(h)
    return SpectralDecomposition(e, v)


def evolve_exact(o: np.ndarray, h, t: float) -> np.ndarray:
    """``exp(iHt) O exp(-iHt)``; ``h`` may be a matrix or a cached decomposition."""
    sd = h if isinstance(h, SpectralDecomposition) else spectral_decomposition(h)
    v = sd.eigenvectors
    phase = np.exp(1j * sd.eigenvalues * t)
    o_eig = v.conj().T @ o @ v
    return v @ (phase[:, None] * o_eig * phase.conj()[None, :]) @ v.conj().T


def evolve_exact_series(o: np.ndarray, sd: SpectralDecomposition, times):
    """Yield ``O(t)`` for each ``t``, rotating ``O`` into the eigenbasis only once."""
    v = sd.eigenvectors
    o_eig = v.conj().T @ o @ v
    for t in times:
        phase = np.exp(1j * sd.eigenvalues * t)
        yield v @ (phase[:, None] * o_eig * phase.conj()[None, :]) @ v.conj().T


def _fwht(a: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform along the last axis."""
    a = a.copy()
    n = a.shape[-1]
    h = 1
    while h < n:
        a = a.reshape(a.shape[:-1] + (n // (2 * h), 2, h))
        lo, hi = a[..., 0, :].copy(), a[..., 1, :].copy()
        a[..., 0, :] = lo + hi
        a[..., 1, :] = lo - hi
        a = a.reshape(a.shape[:-3] + (n,))
        h *= 2
    return a


def all_raw_amplitudes(o: np.ndarray) -> np.ndarray:
    """``Tr[Q O]`` for all ``4**L`` unnormalized strings, indexed site-major.

    For a string with X/Y flip mask ``x`` and Y/Z sign mask ``z`` the trace is
    a single sum ``i**nY sum_s O[s, s^x] (-1)**|s & z|``; for fixed ``x`` the
    sums over all ``z`` form one Walsh-Hadamard transform.
    """
    o = np.asarray(o)
    L = num_sites(o)
    dim = 2**L
    s = np.arange(dim)
    diag = o[s[None, :], s[None, :] ^ s[:, None]]  # diag[x, s] = O[s, s^x]
    sums = _fwht(diag)  # sums[x, z]
    # Per site: (x_j, z_j) = (0,0) I, (1,0) X, (1,1) Y, (0,1) Z.
    codes = np.zeros((dim, dim), dtype=np.int64)
    n_y = np.zeros((dim, dim), dtype=np.int64)
    for j in range(L):
        bit = L - 1 - j
        xb = (s[:, None] >> bit) & 1
        zb = (s[None, :] >> bit) & 1
        code = np.where(xb == 1, np.where(zb == 1, 2, 1), np.where(zb == 1, 3, 0))
        codes = codes * 4 + code
        n_y += code == 2
    out = np.empty(4**L, dtype=np.complex128)
    out[codes.ravel()] = (sums * (1j) ** n_y).ravel()
    return out


def pauli_weights(o: np.ndarray) -> np.ndarray:
    """Normalized ``|A_Q|**2 / sum |A_Q|**2`` over all strings."""
    L = num_sites(o)
    if L > L_ENUM_MAX:
        raise ValueError(f"L={L} exceeds enumeration limit {L_ENUM_MAX}")
    w = np.abs(all_raw_amplitudes(o)) ** 2
    total = w.sum()
    if total == 0:
        raise ValueError("zero operator has no Pauli distribution")
    return w / total


@dataclass(frozen=True)
class ExactMarginals:
    length: MarginalDistribution
    mass: MarginalDistribution

    @property
    def h(self) -> float:
        return self.length.mean

    @property
    def m(self) -> float:
        return self.mass.mean


def exact_marginals(o: np.ndarray) -> ExactMarginals:
    w = pauli_weights(o)
    L = num_sites(o)
    pl = np.bincount(length_table(L), weights=w, minlength=L + 1)
    pm = np.bincount(mass_table(L), weights=w, minlength=L + 1)
    return ExactMarginals(
        MarginalDistribution("length", clip_probabilities(pl)),
        MarginalDistribution("mass", clip_probabilities(pm)),
    )


def length_distribution_partial_trace(o: np.ndarray) -> MarginalDistribution:
    """Length marginal from purities of partial traces, without enumerating strings.

    ``S2(l) = Tr[(Tr_{>l} O)**2] / (2**(L-l) Tr[O**2])`` and ``P(l) = S2(l) - S2(l-1)``.
    """
    o = np.asarray(o)
    L = num_sites(o)
    norm = float(np.real(np.vdot(o, o)))
    s2 = np.empty(L + 1)
    for l in range(L + 1):
        t = o.reshape(2**l, 2 ** (L - l), 2**l, 2 ** (L - l))
        red = np.einsum("aibi->ab", t)
        s2[l] = float(np.real(np.vdot(red, red))) / (2 ** (L - l) * norm)
    return MarginalDistribution("length", clip_probabilities(np.diff(s2, prepend=0.0)))


def operator_magic(o: np.ndarray) -> float:
    """``-ln sum_Q w_Q**2`` over the normalized Pauli weights."""
    w = pauli_weights(o)
    return max(0.0, float(-np.log(np.sum(w * w))))


def choi_entanglement(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-bond von Neumann and Renyi-2 entropies of a normalized amplitude vector."""
    L = (v.size.bit_length() - 1) // 2
    vn, r2 = np.empty(L - 1), np.empty(L - 1)
    for l in range(1, L):
        s = np.linalg.svd(v.reshape(4**l, -1), compute_uv=False)
        vn[l - 1], r2[l - 1] = entropies_from_schmidt(s)
    return vn, r2


def initial_dense_operator(L: int) -> np.ndarray:
    return np.kron(pauli_matrix(3), np.eye(2 ** (L - 1)))

"""Pauli algebra and dense-operator <-> Pauli-amplitude conversions.

Strings are tuples of integer codes ``0=I, 1=X, 2=Y, 3=Z``. Sites are ordered
left to right and the flat string index is site-major: site 1 is the most
significant base-4 digit, ``index = sum_j code_j * 4**(L-1-j)``. Dense
matrices use the matching ``np.kron(site_1, site_2, ...)`` ordering.

Two amplitude conventions appear:

* ``amplitude`` returns the raw trace ``Tr[Q O]`` against the unnormalized
  string ``Q`` (entries of size up to ``2**L``).
* ``dense_to_choi`` returns ``A_mu = Tr[O P_mu]`` against the normalized
  strings ``P_mu = Q_mu / 2**(L/2)``, which form an orthonormal basis.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence

import numpy as np

I, X, Y, Z = 0, 1, 2, 3
LABELS = "IXYZ"

HERMITIAN_TOL = 1e-12
L_DENSE_MAX = 10
L_ENUM_MAX = 8

_PAULI = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=np.complex128,
)
_PAULI.setflags(write=False)

# to_choi[mu, 2r+c] = sigma^mu[c, r] / sqrt(2): contracts a site's (row, col) pair.
_TO_CHOI = np.transpose(_PAULI, (0, 2, 1)).reshape(4, 4) / np.sqrt(2)
# from_choi[2r+c, mu] = sigma^mu[r, c] / sqrt(2)
_FROM_CHOI = _PAULI.reshape(4, 4).T / np.sqrt(2)


def pauli_matrix(code: int) -> np.ndarray:
    """Return the 2x2 Pauli matrix for ``code`` (a fresh, writable copy)."""
    _check_code(code)
    return _PAULI[code].copy()


def normalized_pauli_matrix(code: int) -> np.ndarray:
    """Return ``sigma^code / sqrt(2)``; these satisfy ``Tr[s^a s^b] = delta_ab``."""
    return pauli_matrix(code) / np.sqrt(2)


def _check_code(code: int) -> None:
    if code not in (0, 1, 2, 3):
        raise ValueError(f"invalid Pauli code {code!r}")


def parse_pauli(label: str) -> tuple[int, ...]:
    """``"ZIXI"`` -> ``(3, 0, 1, 0)``."""
    try:
        return tuple(LABELS.index(ch) for ch in label.upper())
    except ValueError:
        raise ValueError(f"invalid Pauli label {label!r}") from None


def format_pauli(codes: Iterable[int]) -> str:
    return "".join(LABELS[c] for c in codes)


def string_mass(codes: Sequence[int]) -> int:
    """Number of non-identity sites."""
    return sum(1 for c in codes if c != 0)


def string_length(codes: Sequence[int]) -> int:
    """1-based position of the rightmost non-identity site, 0 for the identity."""
    for j in range(len(codes), 0, -1):
        if codes[j - 1] != 0:
            return j
    return 0


def string_index(codes: Sequence[int]) -> int:
    idx = 0
    for c in codes:
        _check_code(c)
        idx = 4 * idx + c
    return idx


def index_to_string(index: int, L: int) -> tuple[int, ...]:
    if not 0 <= index < 4**L:
        raise ValueError(f"index {index} out of range for L={L}")
    codes = []
    for _ in range(L):
        index, c = divmod(index, 4)
        codes.append(c)
    return tuple(reversed(codes))


def string_codes_table(L: int) -> np.ndarray:
    """All ``4**L`` strings as an integer array of shape ``(4**L, L)``, in index order."""
    idx = np.arange(4**L)
    shifts = 2 * np.arange(L - 1, -1, -1)
    return (idx[:, None] >> shifts[None, :]) & 3


def mass_table(L: int) -> np.ndarray:
    return (string_codes_table(L) != 0).sum(axis=1)


def length_table(L: int) -> np.ndarray:
    nonid = string_codes_table(L) != 0
    pos = np.arange(1, L + 1)
    return np.max(np.where(nonid, pos[None, :], 0), axis=1)


def num_sites(matrix: np.ndarray) -> int:
    """Site count of a ``2**L x 2**L`` matrix."""
    n, m = matrix.shape
    L = n.bit_length() - 1
    if n != m or n != 1 << L or L < 1:
        raise ValueError(f"expected a 2**L square matrix, got shape {matrix.shape}")
    return L


def pauli_string_matrix(codes: Sequence[int], normalized: bool = False) -> np.ndarray:
    """Dense ``2**L`` matrix of a Pauli string."""
    out = np.ones((1, 1), dtype=np.complex128)
    for c in codes:
        _check_code(c)
        out = np.kron(out, _PAULI[c])
    if normalized:
        out /= 2 ** (len(codes) / 2)
    return out


def amplitude(o: np.ndarray, codes: Sequence[int]) -> complex:
    """``Tr[Q O]`` for the unnormalized string ``Q`` using a single sum over configurations.

    For every basis state ``s`` only one ``s'`` has a nonzero ``<s'|Q|s>``:
    ``s' = s xor flips`` where ``flips`` marks X/Y sites, and the element is
    ``i**nY * (-1)**popcount(s & (Y|Z sites))``.
    """
    o = np.asarray(o)
    L = num_sites(o)
    if len(codes) != L:
        raise ValueError(f"string of length {len(codes)} does not match operator on {L} sites")
    if L > L_DENSE_MAX:
        raise ValueError(f"L={L} exceeds dense limit {L_DENSE_MAX}")
    flips = 0
    signs = 0
    n_y = 0
    for c in codes:
        _check_code(c)
        flips = (flips << 1) | (c in (X, Y))
        signs = (signs << 1) | (c in (Y, Z))
        n_y += c == Y
    s = np.arange(1 << L)
    parity = _popcount(s & signs) & 1
    phase = (1j) ** n_y * (1 - 2 * parity)
    return complex(np.sum(o[s, s ^ flips] * phase))


def _popcount(a: np.ndarray) -> np.ndarray:
    a = a.astype(np.int64)
    count = np.zeros_like(a)
    while np.any(a):
        count += a & 1
        a = a >> 1
    return count


def dense_to_choi(o: np.ndarray, hermitian: bool = True) -> np.ndarray:
    """Normalized Pauli amplitudes ``A_mu = Tr[O P_mu]`` for all ``4**L`` strings.

    Returns a real vector when ``hermitian`` is set (raising if the imaginary
    residue exceeds the Hermiticity tolerance), complex otherwise.
    """
    o = np.asarray(o, dtype=np.complex128)
    L = num_sites(o)
    if L > L_DENSE_MAX:
        raise ValueError(f"L={L} exceeds dense limit {L_DENSE_MAX}")
    # (r1..rL, c1..cL) -> (r1, c1, r2, c2, ...) -> one 4-dim axis per site
    t = o.reshape((2,) * (2 * L))
    order = [k for j in range(L) for k in (j, L + j)]
    t = t.transpose(order).reshape((4,) * L)
    for j in range(L):
        t = np.moveaxis(np.tensordot(_TO_CHOI, t, axes=([1], [j])), 0, j)
    v = t.reshape(-1)
    if not hermitian:
        return v
    scale = max(1.0, float(np.max(np.abs(v), initial=0.0)))
    if np.max(np.abs(v.imag), initial=0.0) > HERMITIAN_TOL * scale:
        raise ValueError("operator flagged Hermitian has complex Pauli amplitudes")
    return np.ascontiguousarray(v.real)


def choi_to_dense(v: np.ndarray) -> np.ndarray:
    """Inverse of :func:`dense_to_choi`: ``O = sum_mu A_mu P_mu``."""
    v = np.asarray(v)
    L = (v.size.bit_length() - 1) // 2
    if v.ndim != 1 or v.size != 4**L or L < 1:
        raise ValueError(f"expected a vector of length 4**L, got shape {v.shape}")
    if L > L_DENSE_MAX:
        raise ValueError(f"L={L} exceeds dense limit {L_DENSE_MAX}")
    t = v.astype(np.complex128).reshape((4,) * L)
    for j in range(L):
        t = np.moveaxis(np.tensordot(_FROM_CHOI, t, axes=([1], [j])), 0, j)
    t = t.reshape((2,) * (2 * L))
    order = [2 * j for j in range(L)] + [2 * j + 1 for j in range(L)]
    return t.transpose(order).reshape(1 << L, 1 << L)

"""Operator states as real matrix product states over the normalized Pauli basis.

Each site tensor has shape ``(chi_left, 4, chi_right)``; the physical index is
the Pauli code of that site. Sites are 0-based in this API, bonds are labelled
by the number of sites to their left (bond ``l`` separates sites ``0..l-1``
from ``l..L-1``), so ``1 <= l <= L-1``.

Canonical tags:

* ``"left"``: sites ``0..L-2`` are left isometries, the norm sits in site ``L-1``.
* ``"right"``: sites ``1..L-1`` are right isometries, the norm sits in site 0.
* ``"mixed"``: left isometries before ``center``, right isometries after it.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg

from .pauli import L_DENSE_MAX

DEFAULT_CUTOFF = 1e-12
DEFAULT_CHI_MAX = 256
ORTHOGONAL_TOL = 1e-10


@dataclass
class TruncationReport:
    bond: int
    discarded_weight: float
    chi_before: int
    chi_after: int


@dataclass
class OperatorMPS:
    tensors: list[np.ndarray]
    canonical: str = "none"
    center: int | None = None
    norm_log: float = 0.0

    def __post_init__(self) -> None:
        if not self.tensors:
            raise ValueError("an operator MPS needs at least one site")
        for j, t in enumerate(self.tensors):
            if t.ndim != 3 or t.shape[1] != 4:
                raise ValueError(f"site {j}: expected shape (chi, 4, chi), got {t.shape}")
            if not np.isrealobj(t):
                raise TypeError(f"site {j}: tensors must be real")
        if self.tensors[0].shape[0] != 1 or self.tensors[-1].shape[2] != 1:
            raise ValueError("boundary bond dimensions must be 1")
        for j in range(len(self.tensors) - 1):
            if self.tensors[j].shape[2] != self.tensors[j + 1].shape[0]:
                raise ValueError(f"bond mismatch between sites {j} and {j + 1}")

    @property
    def L(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self) -> list[int]:
        """Internal bond dimensions, ``bond_dims[l-1]`` for bond ``l``."""
        return [t.shape[2] for t in self.tensors[:-1]]

    @property
    def max_bond(self) -> int:
        return max(self.bond_dims, default=1)

    def copy(self) -> OperatorMPS:
        return OperatorMPS(
            [t.copy() for t in self.tensors], self.canonical, self.center, self.norm_log
        )


def product_operator_mps(codes) -> OperatorMPS:
    """Unit-norm state concentrated on a single Pauli string (bond dimension 1)."""
    codes = list(codes)
    if not codes:
        raise ValueError("need at least one site")
    tensors = []
    for c in codes:
        t = np.zeros((1, 4, 1))
        t[0, c, 0] = 1.0
        tensors.append(t)
    return OperatorMPS(tensors, canonical="left", center=len(codes) - 1)


def random_operator_mps(
    L: int, chi: int, rng: np.random.Generator, normalize: bool = True
) -> OperatorMPS:
    """Gaussian random state with bond dimensions ``min(chi, 4**l, 4**(L-l))``."""
    dims = [1] + [min(chi, 4**l, 4 ** (L - l)) for l in range(1, L)] + [1]
    tensors = [rng.standard_normal((dims[j], 4, dims[j + 1])) for j in range(L)]
    mps = OperatorMPS(tensors)
    if normalize:
        mps = canonicalize(mps, "left")
        _normalize_center(mps)
    return mps


def norm_squared(mps: OperatorMPS) -> float:
    env = np.ones((1, 1))
    for t in mps.tensors:
        env = np.einsum("ab,aic,bid->cd", env, t, t, optimize=True)
    return float(env[0, 0])


def _svd(m: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD with the largest-magnitude entry of every left vector made positive."""
    try:
        u, s, vt = scipy.linalg.svd(m, full_matrices=False, check_finite=False)
    except np.linalg.LinAlgError:
        u, s, vt = scipy.linalg.svd(
            m, full_matrices=False, check_finite=False, lapack_driver="gesvd"
        )
    cols = np.arange(u.shape[1])
    signs = np.sign(u[np.argmax(np.abs(u), axis=0), cols])
    signs[signs == 0] = 1.0
    return u * signs, s, vt * signs[:, None]


def _keep_count(s: np.ndarray, cutoff: float, chi_max: int | None) -> int:
    total = float(np.dot(s, s))
    if total == 0.0:
        return 1
    keep = int(np.count_nonzero(s * s / total >= cutoff)) if cutoff > 0 else len(s)
    if chi_max is not None:
        keep = min(keep, chi_max)
    return max(keep, 1)


def _qr_left(t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    cl, d, cr = t.shape
    q, r = np.linalg.qr(t.reshape(cl * d, cr))
    return q.reshape(cl, d, -1), r


def _qr_right(t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    cl, d, cr = t.shape
    q, r = np.linalg.qr(t.reshape(cl, d * cr).T)
    return r.T, q.T.reshape(-1, d, cr)


def _shift_center(mps: OperatorMPS, target: int) -> None:
    """Move the orthogonality center to ``target`` in place (requires a center)."""
    c = mps.center
    ts = mps.tensors
    while c < target:
        q, r = _qr_left(ts[c])
        ts[c] = q
        ts[c + 1] = np.tensordot(r, ts[c + 1], axes=(1, 0))
        c += 1
    while c > target:
        l, q = _qr_right(ts[c])
        ts[c] = q
        ts[c - 1] = np.tensordot(ts[c - 1], l, axes=(2, 0))
        c -= 1
    mps.center = c
    mps.canonical = "left" if c == mps.L - 1 else "right" if c == 0 else "mixed"


def _ensure_center(mps: OperatorMPS, target: int) -> None:
    if mps.center is None or mps.canonical == "none":
        mps.center = 0
        # full right-to-left sweep establishes right isometries everywhere
        ts = mps.tensors
        for j in range(mps.L - 1, 0, -1):
            l, q = _qr_right(ts[j])
            ts[j] = q
            ts[j - 1] = np.tensordot(ts[j - 1], l, axes=(2, 0))
        mps.canonical = "right"
    _shift_center(mps, target)


def canonicalize(mps: OperatorMPS, form: str = "left", center: int | None = None) -> OperatorMPS:
    """Return a canonical copy; ``form`` is ``"left"``, ``"right"`` or ``"mixed"``."""
    out = mps.copy()
    out.canonical, out.center = "none", None
    if form == "left":
        target = out.L - 1
    elif form == "right":
        target = 0
    elif form == "mixed":
        if center is None or not 0 <= center < out.L:
            raise ValueError("mixed form needs a center site in range")
        target = center
    else:
        raise ValueError(f"unknown canonical form {form!r}")
    _ensure_center(out, target)
    return out


def _normalize_center(mps: OperatorMPS) -> float:
    t = mps.tensors[mps.center]
    n = float(np.linalg.norm(t))
    if n > 0:
        mps.tensors[mps.center] = t / n
        mps.norm_log += np.log(n)
    return n


def normalize(mps: OperatorMPS) -> OperatorMPS:
    """Unit-norm copy; the removed factor is accumulated in ``norm_log``."""
    out = mps.copy()
    if out.center is None:
        _ensure_center(out, out.L - 1)
    _normalize_center(out)
    return out


def truncate(
    mps: OperatorMPS, cutoff: float = DEFAULT_CUTOFF, chi_max: int | None = DEFAULT_CHI_MAX
) -> tuple[OperatorMPS, list[TruncationReport]]:
    """Compress every bond with one left-to-right SVD sweep.

    Discarded weights are absolute squared singular values of the unit-norm
    input, so ``1 - sum(weights)`` is the fidelity with the input.
    """
    out = canonicalize(mps, "right")
    _normalize_center(out)
    reports = []
    ts = out.tensors
    for j in range(out.L - 1):
        cl, d, cr = ts[j].shape
        u, s, vt = _svd(ts[j].reshape(cl * d, cr))
        keep = _keep_count(s, cutoff, chi_max)
        discarded = float(np.dot(s[keep:], s[keep:]))
        reports.append(TruncationReport(j + 1, discarded, len(s), keep))
        ts[j] = u[:, :keep].reshape(cl, d, keep)
        ts[j + 1] = np.tensordot(s[:keep, None] * vt[:keep], ts[j + 1], axes=(1, 0))
    out.center, out.canonical = out.L - 1, "left"
    _normalize_center(out)
    return out, reports


def schmidt_values(mps: OperatorMPS, bond: int) -> np.ndarray:
    """Singular values across bond ``bond`` (descending), for the state as given."""
    if not 1 <= bond <= mps.L - 1:
        raise ValueError(f"bond {bond} out of range 1..{mps.L - 1}")
    work = mps.copy()
    if work.center is None or work.canonical == "none":
        _ensure_center(work, bond - 1)
    else:
        _shift_center(work, bond - 1)
    t = work.tensors[bond - 1]
    return scipy.linalg.svdvals(t.reshape(-1, t.shape[2]), check_finite=False)


def all_schmidt_values(mps: OperatorMPS) -> list[np.ndarray]:
    """Schmidt spectra at bonds ``1..L-1`` from one sweep."""
    work = canonicalize(mps, "right")
    ts = work.tensors
    spectra = []
    for j in range(work.L - 1):
        cl, d, cr = ts[j].shape
        u, s, vt = _svd(ts[j].reshape(cl * d, cr))
        spectra.append(s)
        ts[j] = u.reshape(cl, d, -1)
        ts[j + 1] = np.tensordot(s[:, None] * vt, ts[j + 1], axes=(1, 0))
    return spectra


def check_orthogonal(gate: np.ndarray, tol: float = ORTHOGONAL_TOL) -> None:
    if gate.shape != (16, 16):
        raise ValueError(f"two-site gate must be 16x16, got {gate.shape}")
    if np.iscomplexobj(gate):
        raise TypeError("two-site gate must be real")
    err = np.max(np.abs(gate @ gate.T - np.eye(16)))
    if err > tol:
        raise ValueError(f"gate is not orthogonal (deviation {err:.2e})")


def apply_two_site_gate(
    mps: OperatorMPS,
    gate: np.ndarray,
    j: int,
    cutoff: float = DEFAULT_CUTOFF,
    chi_max: int | None = DEFAULT_CHI_MAX,
    *,
    move: str = "right",
    inplace: bool = False,
    check: bool = True,
) -> tuple[OperatorMPS, TruncationReport]:
    """Apply a 16x16 gate to sites ``j, j+1`` (0-based), then split and truncate.

    ``gate[4*n1 + n2, 4*m1 + m2]`` maps codes ``(m1, m2)`` to ``(n1, n2)``.
    After the split the orthogonality center sits on ``j+1`` (``move="right"``)
    or ``j`` (``move="left"``). The kept spectrum is renormalized to unit
    weight; the report carries the relative discarded weight.
    """
    if not 0 <= j < mps.L - 1:
        raise ValueError(f"gate site {j} out of range 0..{mps.L - 2}")
    if check:
        check_orthogonal(gate)
    out = mps if inplace else mps.copy()
    if out.center is None or out.canonical == "none":
        _ensure_center(out, j)
    elif out.center < j:
        _shift_center(out, j)
    elif out.center > j + 1:
        _shift_center(out, j + 1)
    a, b = out.tensors[j], out.tensors[j + 1]
    cl, cr = a.shape[0], b.shape[2]
    theta = np.tensordot(a, b, axes=(2, 0)).reshape(cl, 16, cr)
    theta = np.einsum("nm,amb->anb", gate, theta, optimize=True)
    u, s, vt = _svd(theta.reshape(cl * 4, 4 * cr))
    keep = _keep_count(s, cutoff, chi_max)
    chi_before = len(s)
    total = float(np.dot(s, s))
    discarded = float(np.dot(s[keep:], s[keep:])) / total if total > 0 else 0.0
    s = s[:keep]
    norm = float(np.linalg.norm(s))
    if norm > 0:
        s = s / norm
        out.norm_log += np.log(norm)
    u, vt = u[:, :keep], vt[:keep]
    if move == "right":
        out.tensors[j] = u.reshape(cl, 4, keep)
        out.tensors[j + 1] = (s[:, None] * vt).reshape(keep, 4, cr)
        out.center = j + 1
    elif move == "left":
        out.tensors[j] = (u * s).reshape(cl, 4, keep)
        out.tensors[j + 1] = vt.reshape(keep, 4, cr)
        out.center = j
    else:
        raise ValueError(f"move must be 'left' or 'right', got {move!r}")
    out.canonical = "left" if out.center == out.L - 1 else "right" if out.center == 0 else "mixed"
    return out, TruncationReport(j + 1, discarded, chi_before, keep)


def mps_to_choi(mps: OperatorMPS) -> np.ndarray:
    """Full ``4**L`` amplitude vector in site-major string order."""
    if mps.L > L_DENSE_MAX:
        raise ValueError(f"L={mps.L} exceeds dense limit {L_DENSE_MAX}")
    v = mps.tensors[0].reshape(4, -1)
    for t in mps.tensors[1:]:
        v = np.tensordot(v, t, axes=(1, 0)).reshape(-1, t.shape[2])
    return v.reshape(-1)


def mps_from_choi(
    v: np.ndarray, cutoff: float = 0.0, chi_max: int | None = None
) -> OperatorMPS:
    """Left-canonical MPS of a real ``4**L`` amplitude vector (not renormalized)."""
    v = np.asarray(v)
    if np.iscomplexobj(v):
        if np.max(np.abs(v.imag), initial=0.0) > 1e-12:
            raise TypeError("amplitude vector must be real")
        v = v.real
    L = (v.size.bit_length() - 1) // 2
    if v.ndim != 1 or v.size != 4**L or L < 1:
        raise ValueError(f"expected a vector of length 4**L, got shape {v.shape}")
    tensors = []
    rest = v.reshape(1, -1)
    for _ in range(L - 1):
        chi = rest.shape[0]
        u, s, vt = _svd(rest.reshape(chi * 4, -1))
        keep = _keep_count(s, cutoff, chi_max)
        tensors.append(u[:, :keep].reshape(chi, 4, keep))
        rest = s[:keep, None] * vt[:keep]
    tensors.append(rest.reshape(rest.shape[0], 4, 1))
    return OperatorMPS(tensors, canonical="left", center=L - 1)


# -- checkpoint format -----------------------------------------------------------------
# header: magic, format version, L, canonical code, center (-1 = none), norm_log,
# then L+1 bond dimensions (uint32) and the row-major site tensors as little-endian f64.

_MAGIC = b"OPMPS\0"
_VERSION = 1
_CANON_CODES = {"none": 0, "left": 1, "right": 2, "mixed": 3}


def write_checkpoint(mps: OperatorMPS, path: str | Path) -> None:
    buf = io.BytesIO()
    buf.write(_MAGIC)
    center = -1 if mps.center is None else mps.center
    buf.write(struct.pack("<IIIid", _VERSION, mps.L, _CANON_CODES[mps.canonical], center, mps.norm_log))
    dims = [1] + mps.bond_dims + [1]
    buf.write(struct.pack(f"<{len(dims)}I", *dims))
    for t in mps.tensors:
        buf.write(np.ascontiguousarray(t, dtype="<f8").tobytes())
    Path(path).write_bytes(buf.getvalue())


def read_checkpoint(path: str | Path) -> OperatorMPS:
    data = Path(path).read_bytes()
    if not data.startswith(_MAGIC):
        raise ValueError(f"{path}: not an operator-MPS checkpoint")
    off = len(_MAGIC)
    version, L, canon, center, norm_log = struct.unpack_from("<IIIid", data, off)
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    off += struct.calcsize("<IIIid")
    dims = struct.unpack_from(f"<{L + 1}I", data, off)
    off += 4 * (L + 1)
    tensors = []
    for j in range(L):
        shape = (dims[j], 4, dims[j + 1])
        n = int(np.prod(shape))
        tensors.append(np.frombuffer(data, dtype="<f8", count=n, offset=off).astype(np.float64).reshape(shape))
        off += 8 * n
    if off != len(data):
        raise ValueError(f"{path}: trailing bytes in checkpoint")
    canonical = {v: k for k, v in _CANON_CODES.items()}[canon]
    return OperatorMPS(tensors, canonical, None if center < 0 else center, norm_log)


def basis_amplitude(mps: OperatorMPS, codes) -> float:
    """Amplitude of a single string, by contracting one physical slice per site."""
    v = np.ones(1)
    for t, c in zip(mps.tensors, codes, strict=True):
        v = v @ t[:, c, :]
    return float(v[0])


__all__ = [
    "OperatorMPS",
    "TruncationReport",
    "all_schmidt_values",
    "apply_two_site_gate",
    "basis_amplitude",
    "canonicalize",
    "check_orthogonal",
    "mps_from_choi",
    "mps_to_choi",
    "norm_squared",
    "normalize",
    "product_operator_mps",
    "random_operator_mps",
    "read_checkpoint",
    "schmidt_values",
    "truncate",
    "write_checkpoint",
]

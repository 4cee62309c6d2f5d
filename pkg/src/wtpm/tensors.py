"""Dense symmetric matrix / order-3 tensor containers and the linear algebra
kernels used by the decomposition pipeline."""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, ShapeError

#: relative asymmetry tolerated (and averaged away) on construction
SYMMETRY_RTOL = 1e-8


def _frozen(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


def _check_asymmetry(arr, sym, kind):
    scale = np.max(np.abs(arr)) if arr.size else 0.0
    if not np.all(np.isfinite(arr)):
        # asymmetry checks are meaningless on nan/inf; keep them and let
        # consumers (sym_eig, ...) reject
        return
    dev = np.max(np.abs(arr - sym)) if arr.size else 0.0
    if dev > SYMMETRY_RTOL * max(scale, np.finfo(float).tiny):
        raise InvalidInput(f"{kind} input is not symmetric (max deviation {dev:.3g})")


class SymMatrix:
    """Symmetric ``D x D`` matrix.

    The input is symmetrized as ``(M + M.T) / 2``; inputs whose asymmetry
    exceeds ``SYMMETRY_RTOL`` relative to the largest entry are rejected.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries):
        arr = np.asarray(entries, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
            raise ShapeError(f"expected a non-empty square matrix, got shape {arr.shape}")
        sym = 0.5 * (arr + arr.T)
        _check_asymmetry(arr, sym, "matrix")
        self._entries = _frozen(sym)

    @property
    def entries(self):
        return self._entries

    @property
    def dim(self):
        return self._entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._entries
        return self._entries.astype(dtype)

    def __repr__(self):
        return f"SymMatrix(dim={self.dim})"


_PERMS = ((0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0))


def _canonical_index(dim):
    idx = np.sort(np.indices((dim, dim, dim)).reshape(3, -1), axis=0)
    return idx[0], idx[1], idx[2]


class SymTensor3:
    """Order-3 tensor invariant under all six index permutations.

    Construction averages over the permutations and then copies the value
    stored at the sorted index ``(i <= j <= k)`` to every permutation, so the
    symmetry is exact rather than up to round-off.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries):
        arr = np.asarray(entries, dtype=float)
        if arr.ndim != 3 or not (arr.shape[0] == arr.shape[1] == arr.shape[2]) or arr.shape[0] < 1:
            raise ShapeError(f"expected a non-empty cubic tensor, got shape {arr.shape}")
        d = arr.shape[0]
        perms = [arr.transpose(p) for p in _PERMS]
        if all(np.array_equal(arr, q) for q in perms):
            # already exactly symmetric; averaging would only add round-off
            self._entries = _frozen(arr)
            return
        avg = (arr + sum(perms)) / 6.0
        _check_asymmetry(arr, avg, "tensor")
        i, j, k = _canonical_index(d)
        self._entries = _frozen(avg[i, j, k].reshape(d, d, d))

    @property
    def entries(self):
        return self._entries

    @property
    def dim(self):
        return self._entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._entries
        return self._entries.astype(dtype)

    def __repr__(self):
        return f"SymTensor3(dim={self.dim})"


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues in descending order with matching orthonormal columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self):
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.T


def sym_eig(m):
    """Full spectral decomposition of a symmetric matrix, eigenvalues descending."""
    arr = np.asarray(m, dtype=float)
    if not isinstance(m, SymMatrix):
        arr = SymMatrix(arr).entries
    if not np.all(np.isfinite(arr)):
        raise InvalidInput("matrix has non-finite entries")
    vals, vecs = np.linalg.eigh(arr)
    order = np.argsort(vals)[::-1]
    return EigenDecomposition(_frozen(vals[order]), _frozen(vecs[:, order]))


def pseudoinverse(m, rcond=1e-12):
    """Moore-Penrose pseudoinverse.

    Singular values below ``rcond * sigma_max`` are treated as zero.
    """
    a = np.asarray(m, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ShapeError(f"expected a matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInput("matrix has non-finite entries")
    if a.size == 0:
        return np.zeros(a.shape[::-1])
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    cutoff = rcond * (s[0] if s.size else 0.0)
    keep = s > cutoff
    inv_s = np.zeros_like(s)
    inv_s[keep] = 1.0 / s[keep]
    return (vt.T * inv_s) @ u.T


def tensor_contract(t, m1, m2, m3):
    """Multilinear map ``t(m1, m2, m3)``.

    Parameters
    ----------
    t : SymTensor3 or array, shape (D, D, D)
    m1, m2, m3 : arrays, shape (D, K1), (D, K2), (D, K3)
        A 1-d argument is treated as a single column.

    Returns
    -------
    ndarray, shape (K1, K2, K3)
        ``out[a, b, c] = sum_ijk t[i, j, k] m1[i, a] m2[j, b] m3[k, c]``
    """
    t = np.asarray(t, dtype=float)
    if t.ndim != 3:
        raise ShapeError(f"expected an order-3 tensor, got shape {t.shape}")
    ms = []
    for axis, m in enumerate((m1, m2, m3)):
        m = np.asarray(m, dtype=float)
        if m.ndim == 1:
            m = m[:, None]
        if m.ndim != 2 or m.shape[0] != t.shape[axis]:
            raise ShapeError(
                f"factor {axis + 1} has shape {m.shape}, tensor axis has length {t.shape[axis]}"
            )
        ms.append(m)
    # contract one mode at a time: cost O(D^3 K) instead of O(D^3 K^3)
    out = np.tensordot(t, ms[2], axes=([2], [0]))          # (D, D, K3)
    out = np.tensordot(out, ms[1], axes=([1], [0]))        # (D, K3, K2)
    out = np.tensordot(out, ms[0], axes=([0], [0]))        # (K3, K2, K1)
    return out.transpose(2, 1, 0)


def outer3(v):
    """Symmetric rank-1 tensor ``v (x) v (x) v``."""
    v = np.asarray(v, dtype=float).ravel()
    return SymTensor3(np.einsum("i,j,k->ijk", v, v, v))

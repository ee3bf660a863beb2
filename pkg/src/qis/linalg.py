"""Dense complex matrix kernel.

Everything here operates on plain :class:`numpy.ndarray` objects. Matrices are
never wrapped; the functions only validate shapes and the Hermiticity contract.
"""

from typing import NamedTuple, Sequence

import numpy as np

from .errors import ContractError, SizeError

#: Largest Hilbert-space dimension accepted anywhere in the package.
MAX_DIM = 2**20
#: Max-entry tolerance on ``|a - a^dagger|`` for a matrix to count as Hermitian.
HERMITIAN_TOL = 1e-10


class EigenDecomposition(NamedTuple):
    """Ascending eigenvalues and the matching unitary (column) eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self):
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def _as_matrix(a, name="a"):
    a = np.asarray(a)
    if a.ndim != 2:
        raise SizeError(f"{name} must be 2-dimensional, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ContractError(f"{name} has non-finite entries")
    return a


def _as_square(a, name="a"):
    a = _as_matrix(a, name)
    if a.shape[0] != a.shape[1]:
        raise SizeError(f"{name} must be square, got shape {a.shape}")
    return a


def tensor_product(a, b):
    """Kronecker product ``a (x) b``.

    Raises :class:`SizeError` if either output dimension would exceed
    :data:`MAX_DIM`.
    """
    a = _as_matrix(a, "a")
    b = _as_matrix(b, "b")
    rows = a.shape[0] * b.shape[0]
    cols = a.shape[1] * b.shape[1]
    if rows > MAX_DIM or cols > MAX_DIM:
        raise SizeError(f"tensor product of shape ({rows}, {cols}) exceeds MAX_DIM={MAX_DIM}")
    return np.kron(a, b)


def kron_all(*ops):
    """Left-to-right Kronecker product of several operators."""
    out = np.ones((1, 1))
    for op in ops:
        out = tensor_product(out, op)
    return out


def max_asymmetry(a):
    """Largest entry of ``|a - a^dagger|``."""
    a = np.asarray(a)
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


def check_hermitian(a, tol=HERMITIAN_TOL, name="a"):
    a = _as_square(a, name)
    asym = max_asymmetry(a)
    if asym > tol:
        raise ContractError(f"{name} is not Hermitian: max |a - a^dagger| = {asym:.3e} > {tol:.0e}")
    return a


def herm_eig(a, tol=HERMITIAN_TOL):
    """Eigendecomposition of a Hermitian matrix.

    The input is symmetrized as ``(a + a^dagger) / 2`` before calling LAPACK so
    that roundoff-level anti-Hermitian parts never leak into the spectrum.

    Returns:
        EigenDecomposition: eigenvalues ascending, eigenvectors as columns.

    Raises:
        ContractError: if ``max |a - a^dagger| > tol``.
    """
    a = check_hermitian(a, tol)
    if a.shape[0] > MAX_DIM:
        raise SizeError(f"dimension {a.shape[0]} exceeds MAX_DIM={MAX_DIM}")
    sym = (a + a.conj().T) / 2
    w, v = np.linalg.eigh(sym)
    return EigenDecomposition(w, v)


def partial_trace(a, site_dims: Sequence[int], keep):
    """Trace out every site not listed in ``keep``.

    Args:
        a: square operator on ``prod(site_dims)`` dimensions.
        site_dims: local dimension of each tensor factor, most significant first.
        keep: indices (0-based) of the sites to retain. Output factors follow the
            ascending order of these indices.
    """
    a = _as_square(a)
    site_dims = [int(d) for d in site_dims]
    if int(np.prod(site_dims)) != a.shape[0]:
        raise SizeError(f"site dims {site_dims} do not multiply to {a.shape[0]}")
    n = len(site_dims)
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= n for k in keep):
        raise SizeError(f"keep indices {keep} out of range for {n} sites")
    traced = [k for k in range(n) if k not in keep]
    t = a.reshape(site_dims + site_dims)
    # Contract traced sites pairwise, highest index first so lower axes stay put.
    for k in reversed(traced):
        cur = t.ndim // 2
        t = np.trace(t, axis1=k, axis2=k + cur)
    d_keep = int(np.prod([site_dims[k] for k in keep])) if keep else 1
    return t.reshape(d_keep, d_keep)


def commutator(a, b):
    a = _as_square(a, "a")
    b = _as_square(b, "b")
    if a.shape != b.shape:
        raise SizeError(f"shape mismatch {a.shape} vs {b.shape}")
    return a @ b - b @ a


def commutator_norm(a, b):
    """Frobenius norm of ``ab - ba``."""
    return float(np.linalg.norm(commutator(a, b)))

"""U(1) asymmetry: twirling over ``exp(-iHt)`` and the relative entropy of asymmetry."""

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import SizeError
from .states import Ensemble, relative_entropy

DEFAULT_DEGENERACY_TOL = 1e-8
#: Pairwise commutator norm below which two states count as commuting.
COMMUTE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class TwirlSpec:
    """Generator ``H`` plus the width used to group its eigenvalues."""

    generator: np.ndarray
    degeneracy_tol: float = DEFAULT_DEGENERACY_TOL

    def __post_init__(self):
        h = linalg.check_hermitian(np.asarray(self.generator, dtype=complex), name="generator")
        if not self.degeneracy_tol > 0:
            raise ValueError("degeneracy_tol must be positive")
        object.__setattr__(self, "generator", h)

    @property
    def dim(self):
        return self.generator.shape[0]

    def eigen(self):
        """Eigenpairs plus an integer group id per eigenvalue.

        Groups are formed by single linkage on the sorted spectrum: a new group
        starts wherever the gap to the previous eigenvalue exceeds the tolerance.
        """
        w, v = linalg.herm_eig(self.generator)
        groups = np.concatenate([[0], np.cumsum(np.diff(w) > self.degeneracy_tol)])
        return w, v, groups


def _check_dims(rho, spec):
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (spec.dim, spec.dim):
        raise SizeError(f"state shape {rho.shape} does not match generator dim {spec.dim}")
    return rho


def twirl(rho, spec: TwirlSpec):
    """Infinite-time average ``G_H(rho) = sum_n Pi_n rho Pi_n`` over H's eigenspaces."""
    rho = _check_dims(rho, spec)
    _, v, groups = spec.eigen()
    in_basis = v.conj().T @ rho @ v
    same_block = groups[:, None] == groups[None, :]
    return v @ np.where(same_block, in_basis, 0) @ v.conj().T


def finite_time_twirl(rho, spec: TwirlSpec, T, steps=1000):
    """Trapezoidal ``(1/2T) int_{-T}^{T} e^{-iHt} rho e^{iHt} dt``.

    The conjugation is diagonal in H's eigenbasis, so each matrix element is
    multiplied by the time average of ``exp(-i (w_n - w_m) t)``. ``steps`` is
    raised if needed so that ``max |w_n - w_m| * dt < 0.1``.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    if steps < 100:
        raise ValueError("steps must be at least 100")
    rho = _check_dims(rho, spec)
    w, v, _ = spec.eigen()
    dw = w[:, None] - w[None, :]
    spread = float(np.max(np.abs(dw)))
    steps = max(int(steps), math.ceil(2 * T * spread / 0.1) + 1)
    t = np.linspace(-T, T, steps + 1)
    trap = np.full(t.size, 1.0)
    trap[0] = trap[-1] = 0.5
    trap *= (t[1] - t[0]) / (2 * T)
    factor = np.empty(dw.shape, dtype=complex)
    # only distinct gaps need the quadrature
    uniq, inverse = np.unique(np.round(dw, 14), return_inverse=True)
    for k, g in enumerate(uniq):
        factor.flat[np.flatnonzero(inverse == k)] = np.sum(trap * np.exp(-1j * g * t))
    in_basis = v.conj().T @ rho @ v
    return v @ (in_basis * factor) @ v.conj().T


def rel_entropy_asymmetry(rho, spec: TwirlSpec):
    """``A(rho; H) = S(rho || G_H(rho))``."""
    rho = _check_dims(rho, spec)
    return relative_entropy(rho, twirl(rho, spec))


def average_asymmetry(e: Ensemble, k, degeneracy_tol=DEFAULT_DEGENERACY_TOL):
    """``sum_i p_i A(rho_i; rho_k)``: asymmetry w.r.t. the U(1) group generated by member ``k``.

    Zero-probability members are dropped before the average; ``k`` indexes the
    original ensemble.
    """
    if not 0 <= k < len(e):
        raise IndexError(f"member index {k} out of range for {len(e)} states")
    spec = TwirlSpec(e.states[k], degeneracy_tol)
    total = 0.0
    for p, rho in zip(e.probs, e.states):
        if p > 0:
            total += p * rel_entropy_asymmetry(rho, spec)
    return total


class SymmetryClass(enum.Enum):
    SYMMETRIC = "symmetric"
    ASYMMETRIC = "asymmetric"


def max_pairwise_commutator(e: Ensemble):
    """Largest ``||[rho_i, rho_j]||_F`` over all member pairs."""
    states = e.states
    worst = 0.0
    chunk = max(1, 2**16 // (len(states) * e.dim**2))
    for start in range(0, len(states), chunk):
        block = states[start : start + chunk]
        ab = np.einsum("iab,jbc->ijac", block, states)
        ba = np.einsum("jab,ibc->ijac", states, block)
        worst = max(worst, float(np.sqrt((np.abs(ab - ba) ** 2).sum(axis=(-1, -2))).max()))
    return worst


def ensemble_symmetry_class(e: Ensemble, tol=COMMUTE_TOL):
    """Symmetric iff every pair of members commutes to within ``tol`` (Frobenius)."""
    e = e.drop_zero_weight()
    if max_pairwise_commutator(e) < tol:
        return SymmetryClass.SYMMETRIC
    return SymmetryClass.ASYMMETRIC

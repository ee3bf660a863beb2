"""Density matrices, ensembles, measurements and entropic primitives.

Entropies are in nats. Density matrices are bare ``(d, d)`` complex arrays;
an :class:`Ensemble` stacks its members into one ``(r, d, d)`` array so that the
metrics can work on all members at once.
"""

from dataclasses import dataclass
from typing import Literal

import numpy as np

from . import linalg
from .errors import ContractError, KindError, SizeError, SupportError

TRACE_TOL = 1e-9
PSD_TOL = 1e-10
PROB_TOL = 1e-9
#: Eigenvalues at or below this count as outside the support.
SUPPORT_TOL = 1e-9

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def ket(*amplitudes):
    v = np.asarray(amplitudes, dtype=complex)
    return v / np.linalg.norm(v)


def projector(vec):
    """``|v><v|`` for a (not necessarily normalized) vector."""
    v = np.asarray(vec, dtype=complex).ravel()
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def validate_density_matrix(rho, name="rho"):
    """Return ``rho`` as a complex array after checking the state invariants.

    Checks Hermiticity (1e-10), unit trace (1e-9) and eigenvalues >= -1e-10.
    A stack ``(r, d, d)`` is checked member by member.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim < 2 or rho.shape[-1] != rho.shape[-2]:
        raise SizeError(f"{name} must be square, got shape {rho.shape}")
    if not np.all(np.isfinite(rho)):
        raise ContractError(f"{name} has non-finite entries")
    stack = rho.reshape((-1,) + rho.shape[-2:])
    herm = np.swapaxes(stack, -1, -2).conj()
    asym = np.abs(stack - herm).max(axis=(-1, -2))
    traces = np.trace(stack, axis1=-2, axis2=-1).real
    lows = np.linalg.eigvalsh((stack + herm) / 2)[:, 0]
    for i in range(len(stack)):
        label = name if rho.ndim == 2 else f"{name}[{i}]"
        if asym[i] > linalg.HERMITIAN_TOL:
            raise ContractError(f"{label} is not Hermitian: max |a - a^dagger| = {asym[i]:.3e}")
        if abs(traces[i] - 1) > TRACE_TOL:
            raise ContractError(f"{label} has trace {traces[i]!r}, expected 1")
        if lows[i] < -PSD_TOL:
            raise ContractError(f"{label} has negative eigenvalue {lows[i]:.3e}")
    return rho


def _clamped_spectrum(rho):
    w = np.linalg.eigvalsh((rho + np.swapaxes(rho, -1, -2).conj()) / 2)
    return np.clip(w, 0.0, None)


def _entropy_from_eigs(w):
    w = np.clip(w, 0.0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(w > 0, -w * np.log(w), 0.0)
    return terms.sum(axis=-1)


def von_neumann_entropy(rho):
    """``-Tr rho ln rho`` (nats). Works on stacks ``(..., d, d)`` as well."""
    s = _entropy_from_eigs(_clamped_spectrum(np.asarray(rho)))
    return float(s) if np.ndim(s) == 0 else s


def relative_entropy(rho, sigma, support_tol=SUPPORT_TOL):
    """Quantum relative entropy ``S(rho || sigma) = Tr rho ln rho - Tr rho ln sigma``.

    ``ln sigma`` is evaluated on the numerical support of ``sigma`` only
    (eigenvalues above ``support_tol``). The result is clamped at 0.

    Raises:
        SupportError: if some eigenvector ``u`` of ``rho`` with eigenvalue
            ``lambda`` has ``lambda * ||P_ker(sigma) u||^2 > support_tol``. The
            offending overlap is stored on the exception.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2:
        raise SizeError(f"rho must be a single matrix, got shape {rho.shape}")
    return float(relative_entropies_to(rho[None], sigma, support_tol)[0])


def relative_entropies_to(rhos, sigma, support_tol=SUPPORT_TOL):
    """``S(rho_i || sigma)`` for every member of a stack against one reference."""
    rhos = np.asarray(rhos, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if rhos.ndim != 3 or rhos.shape[1:] != sigma.shape:
        raise SizeError(f"shape mismatch {rhos.shape} vs {sigma.shape}")
    for i, r in enumerate(rhos):
        linalg.check_hermitian(r, name=f"rho[{i}]")
    mu, w = linalg.herm_eig(sigma)
    lam, u = np.linalg.eigh((rhos + np.swapaxes(rhos, -1, -2).conj()) / 2)
    lam = np.clip(lam, 0.0, None)
    on = mu > support_tol
    # overlap[i, k, l] = |<w_k|u_il>|^2
    overlap = np.abs(np.einsum("ak,ial->ikl", w.conj(), u)) ** 2
    kernel_weight = lam * overlap[:, ~on, :].sum(axis=1)
    worst = float(kernel_weight.max(initial=0.0))
    if worst > support_tol:
        raise SupportError(
            f"supp(rho) not contained in supp(sigma): kernel overlap {worst:.3e}", worst
        )
    with np.errstate(divide="ignore", invalid="ignore"):
        neg_s = np.where(lam > 0, lam * np.log(lam), 0.0).sum(axis=1)
    # Tr[rho ln sigma] = sum_k ln(mu_k) <w_k|rho|w_k>
    diag_rho = np.einsum("ikl,il->ik", overlap[:, on, :], lam)
    cross = diag_rho @ np.log(mu[on])
    return np.clip(neg_s - cross, 0.0, None)


def kl_divergence(p, q, support_tol=SUPPORT_TOL):
    """Classical KL divergence ``D(p || q)`` in nats.

    Terms with ``p`` below 1e-15 contribute zero. A term with ``q == 0`` but
    ``p > support_tol`` raises :class:`SupportError`.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise SizeError(f"shape mismatch {p.shape} vs {q.shape}")
    bad = (q <= 0) & (p > support_tol)
    if np.any(bad):
        raise SupportError("q vanishes where p is positive", float(p[bad].max()))
    live = (p > 1e-15) & (q > 0)
    return float(np.sum(p[live] * (np.log(p[live]) - np.log(q[live]))))


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Probability vector paired with equal-dimension density matrices."""

    probs: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float).ravel()
        states = np.asarray(self.states, dtype=complex)
        if states.ndim == 2:
            states = states[None]
        if states.ndim != 3 or states.shape[1] != states.shape[2]:
            raise SizeError(f"states must have shape (r, d, d), got {states.shape}")
        if len(probs) == 0 or len(probs) != len(states):
            raise SizeError(f"{len(probs)} probabilities for {len(states)} states")
        if np.any(probs < 0) or abs(probs.sum() - 1) > PROB_TOL:
            raise ContractError("ensemble probabilities must be >= 0 and sum to 1")
        validate_density_matrix(states, name="states")
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "states", states)

    @classmethod
    def uniform(cls, states):
        states = np.asarray(states)
        return cls(np.full(len(states), 1.0 / len(states)), states)

    @property
    def dim(self):
        return self.states.shape[1]

    def __len__(self):
        return len(self.probs)

    def drop_zero_weight(self):
        """Copy without zero-probability members (all p_i > 0)."""
        live = self.probs > 0
        if live.all():
            return self
        return Ensemble(self.probs[live] / self.probs[live].sum(), self.states[live])


@dataclass(frozen=True, eq=False)
class MeasurementFamily:
    """A projective basis or POVM, stored as an ``(l, d, d)`` element stack."""

    elements: np.ndarray
    kind: Literal["projective", "povm"] = "projective"

    def __post_init__(self):
        el = np.asarray(self.elements, dtype=complex)
        if el.ndim != 3 or el.shape[1] != el.shape[2]:
            raise SizeError(f"elements must have shape (l, d, d), got {el.shape}")
        if self.kind not in ("projective", "povm"):
            raise KindError(f"unknown measurement kind {self.kind!r}")
        d = el.shape[1]
        if np.max(np.abs(el.sum(axis=0) - np.eye(d))) > 1e-9:
            raise ContractError("measurement elements do not sum to the identity")
        for j, e in enumerate(el):
            linalg.check_hermitian(e, name=f"elements[{j}]")
            if np.linalg.eigvalsh((e + e.conj().T) / 2)[0] < -PSD_TOL:
                raise ContractError(f"elements[{j}] is not positive semidefinite")
        if self.kind == "projective":
            prods = np.einsum("jab,kbc->jkac", el, el)
            expect = np.einsum("jk,jac->jkac", np.eye(len(el)), el)
            if np.max(np.abs(prods - expect)) > 1e-9:
                raise ContractError("projective elements violate Pi_j Pi_k = delta_jk Pi_j")
        object.__setattr__(self, "elements", el)

    @classmethod
    def from_unitary(cls, u):
        """Rank-1 projective family ``{U|j><j|U^dagger}`` from the columns of ``u``."""
        u = np.asarray(u, dtype=complex)
        return cls(np.einsum("aj,bj->jab", u, u.conj()), "projective")

    @classmethod
    def from_kets(cls, kets):
        return cls(np.stack([projector(v) for v in kets]), "projective")

    @property
    def dim(self):
        return self.elements.shape[1]

    def __len__(self):
        return len(self.elements)


def z_basis(n_qubits=1):
    return MeasurementFamily.from_unitary(np.eye(2**n_qubits))


def x_basis(n_qubits=1):
    """Product ``|+->`` basis ordered ``|+..+>, |+..->, ..., |-..->``."""
    h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    return MeasurementFamily.from_unitary(linalg.kron_all(*([h] * n_qubits)))


def average_state(e: Ensemble):
    """``sum_i p_i rho_i``."""
    return np.einsum("i,iab->ab", e.probs, e.states)


def dephase(rho, basis: MeasurementFamily):
    """``P(rho) = sum_j Pi_j rho Pi_j``; accepts a single state or a stack."""
    if basis.kind != "projective":
        raise KindError("dephasing requires a projective measurement family")
    rho = np.asarray(rho, dtype=complex)
    if rho.shape[-1] != basis.dim:
        raise SizeError(f"state dim {rho.shape[-1]} does not match basis dim {basis.dim}")
    el = basis.elements
    return np.einsum("jab,...bc,jcd->...ad", el, rho, el)


def measure_probs(rho, m: MeasurementFamily):
    """Outcome probabilities ``Tr[rho E_j]``; stacks give an ``(r, l)`` table."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape[-1] != m.dim:
        raise SizeError(f"state dim {rho.shape[-1]} does not match measurement dim {m.dim}")
    p = np.einsum("...ab,jba->...j", rho, m.elements).real
    return np.clip(p, 0.0, None)


def bloch_vector(rho):
    """``(Tr rho X, Tr rho Y, Tr rho Z)`` for a qubit state or stack of them."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape[-2:] != (2, 2):
        raise SizeError(f"Bloch vector needs a qubit state, got shape {rho.shape}")
    x = 2 * rho[..., 0, 1].real
    y = -2 * rho[..., 0, 1].imag
    z = (rho[..., 0, 0] - rho[..., 1, 1]).real
    return np.stack([x, y, z], axis=-1)

"""Inception scores: classical IS, qIS (Holevo), projected/classical IS, accessible IS.

All logarithms are natural. Scores are ``exp`` of the corresponding
information quantity, so they lie in ``[1, l]`` for ``l`` outcomes.
"""

import csv
import dataclasses
import io
from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np

from . import gates, search
from .errors import ContractError, OrderingError, SizeError
from .states import (
    Ensemble,
    MeasurementFamily,
    average_state,
    dephase,
    von_neumann_entropy,
    relative_entropies_to,
)

ORDER_SLACK = 1e-6
#: Accuracy is piecewise constant in the projector angles, so local refinement
#: of the high-accuracy axis stops at this step instead of the search default.
ACCURACY_MIN_STEP = 1e-4


# --- classical -------------------------------------------------------------


def mutual_information(p_in, q):
    """``sum_i p_i D(q(.|x_i) || p_out)`` for a table or a stack of tables ``(..., r, l)``."""
    p_in = np.asarray(p_in, dtype=float)
    q = np.clip(np.asarray(q, dtype=float), 0.0, None)
    p_out = np.einsum("i,...ij->...j", p_in, q)
    with np.errstate(divide="ignore", invalid="ignore"):
        logratio = np.where(q > 1e-300, np.log(q) - np.log(p_out[..., None, :]), 0.0)
    return np.einsum("i,...ij->...", p_in, q * logratio)


def _check_distribution(p, what, tol=1e-9):
    p = np.asarray(p, dtype=float)
    if np.any(p < -1e-12) or np.any(np.abs(p.sum(axis=-1) - 1) > tol):
        raise ContractError(f"{what} must be probability distributions")
    return p


def classical_is_table(p_in, q_out):
    """Classical inception score ``exp(sum_i p_i D(q(.|x_i) || p_out))``."""
    p_in = _check_distribution(p_in, "p_in")
    q_out = _check_distribution(q_out, "rows of q_out")
    if q_out.ndim != 2 or q_out.shape[0] != p_in.size:
        raise SizeError(f"q_out shape {q_out.shape} does not match {p_in.size} inputs")
    return float(np.exp(mutual_information(p_in, q_out)))


# --- quantum ---------------------------------------------------------------


def holevo_information(e: Ensemble):
    """``chi = sum_i p_i S(rho_i || rho_bar)`` in nats."""
    rho_bar = average_state(e)
    return float(e.probs @ relative_entropies_to(e.states, rho_bar))


def holevo_from_entropies(e: Ensemble):
    """``S(rho_bar) - sum_i p_i S(rho_i)``; equals :func:`holevo_information`."""
    return von_neumann_entropy(average_state(e)) - float(e.probs @ von_neumann_entropy(e.states))


def quantum_is(e: Ensemble):
    return float(np.exp(holevo_information(e)))


def projected_holevo(e: Ensemble, basis: MeasurementFamily):
    """Holevo information of the dephased ensemble ``{p_i, P(rho_i)}``."""
    projected = dephase(e.states, basis)
    return float(e.probs @ relative_entropies_to(projected, dephase(average_state(e), basis)))


def classical_is(e: Ensemble, basis: MeasurementFamily):
    return float(np.exp(projected_holevo(e, basis)))


def efficacy_ratio(e: Ensemble, basis: MeasurementFamily):
    """``xi_c(P) / xi_q``; one exactly when every member is fixed by ``P``."""
    return classical_is(e, basis) / quantum_is(e)


def is_dephasing_fixed(e: Ensemble, basis: MeasurementFamily, tol=1e-6):
    return bool(np.max(np.abs(dephase(e.states, basis) - e.states)) < tol)


# --- projector families ----------------------------------------------------


@dataclass(frozen=True)
class ProjectorFamily2Class:
    """Qubit basis ``|psi_0> = cos(t/2)|0> + e^{i phi} sin(t/2)|1>``, ``|psi_1>`` orthogonal."""

    theta: float
    phi: float

    n_params: ClassVar[int] = 2
    dim: ClassVar[int] = 2

    @classmethod
    def from_params(cls, params):
        return cls(float(params[0]), float(params[1]))

    @property
    def params(self):
        return np.array([self.theta, self.phi])

    def unitary(self):
        c, s = np.cos(self.theta / 2), np.sin(self.theta / 2)
        ph = np.exp(1j * self.phi)
        return np.array([[c, s], [ph * s, -ph * c]], dtype=complex)

    def measurement(self):
        return MeasurementFamily.from_unitary(self.unitary())

    def axis(self):
        """Bloch vector of ``|psi_0>``."""
        return self.axes(self.params[None])[0]

    @staticmethod
    def axes(params):
        params = np.atleast_2d(params)
        th, ph = params[:, 0], params[:, 1]
        return np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=1)


@dataclass(frozen=True, eq=False)
class ProjectorFamilyU15:
    """Two-qubit basis ``U(theta) |ab>`` with ``U`` of the 15-parameter W form."""

    theta_vec: np.ndarray

    n_params: ClassVar[int] = 15
    dim: ClassVar[int] = 4

    def __post_init__(self):
        t = np.asarray(self.theta_vec, dtype=float).ravel()
        if t.size != 15:
            raise SizeError(f"U15 family takes 15 angles, got {t.size}")
        object.__setattr__(self, "theta_vec", t)

    @classmethod
    def from_params(cls, params):
        return cls(params)

    @property
    def params(self):
        return self.theta_vec.copy()

    def unitary(self):
        return gates.build_w(self.theta_vec)

    def measurement(self):
        return MeasurementFamily.from_unitary(self.unitary())


def family_for_dim(dim):
    if dim == 2:
        return ProjectorFamily2Class
    if dim == 4:
        return ProjectorFamilyU15
    raise SizeError(f"no parameterized projector family for dimension {dim}")


#: Named measurement points inside each family.
X_AXIS_2 = np.array([np.pi / 2, 0.0])
Z_AXIS_2 = np.array([0.0, np.pi])
XX_AXIS_4 = np.zeros(15)
XX_AXIS_4[[1, 4]] = np.pi / 4
ZZ_AXIS_4 = np.zeros(15)


def named_axes(dim):
    """``{"X": params, "Z": params}`` (XX / ZZ for two qubits)."""
    if dim == 2:
        return {"X": X_AXIS_2.copy(), "Z": Z_AXIS_2.copy()}
    return {"X": XX_AXIS_4.copy(), "Z": ZZ_AXIS_4.copy()}


def _flat_states(states):
    """``(r, 2 d^2)`` real matrix so that tables reduce to one real matmul."""
    states = np.asarray(states)
    flat = states.reshape(len(states), -1)
    return np.concatenate([flat.real, -flat.imag], axis=1)


def _table_from_flat(flat, u):
    # q[i, j] = sum_ab conj(u_aj) rho_ab u_bj, real for Hermitian rho
    m = (u.conj()[:, None, :] * u[None, :, :]).reshape(-1, u.shape[1])
    return np.clip(flat @ np.concatenate([m.real, m.imag], axis=0), 0.0, None)


def prob_table(states, family, params):
    """Outcome table ``q[i, j] = Tr[rho_i Pi_j(params)]``."""
    return _table_from_flat(_flat_states(states), family.from_params(params).unitary())


def _qubit_tables(states, params):
    """Vectorized 2-class tables ``(k, r, 2)`` from Bloch vectors."""
    from .states import bloch_vector

    r = bloch_vector(states)
    n = ProjectorFamily2Class.axes(params)
    p0 = np.clip((1 + n @ r.T) / 2, 0.0, 1.0)
    return np.stack([p0, 1 - p0], axis=-1)


def family_search(objective, objective_batch, family, cfg: search.SearchConfig, extra_starts=()):
    """Maximize ``objective(params)`` over a projector family."""
    if family is ProjectorFamily2Class:
        return search.grid_maximize(
            objective, objective_batch, (0.0, 0.0), (np.pi, 2 * np.pi), cfg, (True, False), extra_starts
        )
    return search.random_maximize(objective, family.n_params, 0.0, 2 * np.pi, cfg, extra_starts)


@dataclass
class AccessibleResult:
    value: float
    params: np.ndarray
    converged: bool
    mutual_information: float


def accessible_is(e: Ensemble, family=None, cfg=None, extra_starts=None):
    """Accessible IS restricted to a parameterized projector family.

    The named X and Z points of the family are always among the local starts,
    so the result is never below ``xi_c`` on either axis.
    """
    family = family or family_for_dim(e.dim)
    if family.dim != e.dim:
        raise SizeError(f"family dim {family.dim} does not match ensemble dim {e.dim}")
    cfg = cfg or search.SearchConfig()
    starts = list(named_axes(e.dim).values()) + list(extra_starts or [])
    states, probs = e.states, e.probs
    flat = _flat_states(states)

    def objective(params):
        return float(mutual_information(probs, _table_from_flat(flat, family.from_params(params).unitary())))

    def objective_batch(grid):
        return mutual_information(probs, _qubit_tables(states, grid))

    res = family_search(objective, objective_batch, family, cfg, starts)
    return AccessibleResult(float(np.exp(res.value)), res.params, res.converged, res.value)


def predicted_labels(out_states, family, params):
    """Argmax label per output state (ties go to the lowest index)."""
    return np.argmax(prob_table(out_states, family, params), axis=1)


def high_accuracy_axis(out_states, labels, family=None, cfg=None, extra_starts=None):
    """Projector parameters maximizing classification accuracy on ``out_states``."""
    out_states = np.asarray(out_states)
    labels = np.asarray(labels)
    family = family or family_for_dim(out_states.shape[-1])
    cfg = cfg or search.SearchConfig()
    cfg = dataclasses.replace(cfg, min_step=max(cfg.min_step, ACCURACY_MIN_STEP))
    starts = list(named_axes(family.dim).values()) + list(extra_starts or [])

    flat = _flat_states(out_states)

    def objective(params):
        table = _table_from_flat(flat, family.from_params(params).unitary())
        return float(np.mean(np.argmax(table, axis=1) == labels))

    def objective_batch(grid):
        tables = _qubit_tables(out_states, grid)
        return np.mean(np.argmax(tables, axis=-1) == labels, axis=-1)

    return family_search(objective, objective_batch, family, cfg, starts)


# --- reporting ---------------------------------------------------------------

CSV_COLUMNS = (
    "scenario",
    "task",
    "xi_q",
    "xi_acc",
    "xi_c_X",
    "xi_c_Z",
    "xi_c_highacc",
    "xi_c_opt",
    "efficacy_ratio",
)


@dataclass
class MetricReport:
    scenario: str
    task: str
    xi_q: float
    xi_acc: float
    xi_c_by_axis: dict
    efficacy_ratio: float
    n_labels: int = 2
    axis_params: dict = field(default_factory=dict, repr=False)

    def check_ordering(self, slack=ORDER_SLACK):
        """Raise :class:`OrderingError` unless ``l >= xi_q >= xi_acc >= xi_c(axis)``."""
        if self.xi_q > self.n_labels + slack:
            raise OrderingError(f"xi_q={self.xi_q} exceeds l={self.n_labels}")
        if self.xi_acc > self.xi_q + slack:
            raise OrderingError(f"xi_acc={self.xi_acc} exceeds xi_q={self.xi_q}")
        for axis, value in self.xi_c_by_axis.items():
            if value > self.xi_acc + slack:
                raise OrderingError(f"xi_c[{axis}]={value} exceeds xi_acc={self.xi_acc}")

    def csv_row(self):
        c = self.xi_c_by_axis
        return [
            self.scenario,
            self.task,
            repr(self.xi_q),
            repr(self.xi_acc),
            repr(c["X"]),
            repr(c["Z"]),
            repr(c["highacc"]),
            repr(c["opt"]),
            repr(self.efficacy_ratio),
        ]

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        w.writerow(self.csv_row())
        return buf.getvalue()

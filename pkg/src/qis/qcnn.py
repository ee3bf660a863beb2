"""Nine-qubit QCNN classifier channel ``Phi = trace . pooling . convolution``.

Wiring (1-based qubit labels, as in the docs and config files)::

    convolution   T1 on (1,2,3), (4,5,6), (7,8,9)      one shared 45-param block
                  W1 (2,3)  W2 (3,4)  W3 (6,7)  W4 (7,8)   15 params each
    pooling       K1 on (4,5,6)                          6-param pool
                  K2 on (7,8,9)                          6-param pool (2-class)
                                                         45-param T form (3-class)
    output        qubit 5 (2-class) or qubits 5 and 8 (3-class)

This gives 117 / 156 parameters. Other wirings with the same counts are
possible; ``WIRING_VERSION`` in every model file records this one.

Internally wires are 0-based; :func:`_wire` is the only conversion point.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np

from . import gates, linalg
from .errors import ParseError, SizeError

Task = Literal["2-class", "3-class"]
TASKS = ("2-class", "3-class")
N_QUBITS = 9
WIRING_VERSION = "qis-conv3-v1"


@dataclass(frozen=True)
class GateSpec:
    kind: str
    wires: tuple  # 1-based
    offset: int
    length: int

    def param_slice(self):
        return slice(self.offset, self.offset + self.length)


def _wire(label):
    return label - 1


def _check_task(task):
    if task not in TASKS:
        raise ValueError(f"task must be one of {TASKS}, got {task!r}")
    return task


def gate_layout(task):
    """Ordered gate list (application order) for the given task."""
    _check_task(task)
    t1 = (0, gates.T_PARAMS)
    specs = [GateSpec("T", w, *t1) for w in ((1, 2, 3), (4, 5, 6), (7, 8, 9))]
    off = gates.T_PARAMS
    for w in ((2, 3), (3, 4), (6, 7), (7, 8)):
        specs.append(GateSpec("W", w, off, gates.W_PARAMS))
        off += gates.W_PARAMS
    specs.append(GateSpec("Kpool3", (4, 5, 6), off, gates.KPOOL_PARAMS))
    off += gates.KPOOL_PARAMS
    if task == "2-class":
        specs.append(GateSpec("Kpool3", (7, 8, 9), off, gates.KPOOL_PARAMS))
        off += gates.KPOOL_PARAMS
    else:
        specs.append(GateSpec("Ktri", (7, 8, 9), off, gates.T_PARAMS))
        off += gates.T_PARAMS
    return specs


def param_count(task):
    specs = gate_layout(task)
    return max(s.offset + s.length for s in specs)


def output_qubits(task):
    """1-based labels of the qubits kept after the partial trace."""
    return (5,) if _check_task(task) == "2-class" else (5, 8)


def output_dim(task):
    return 2 ** len(output_qubits(task))


_BUILDERS = {
    "W": gates.build_w,
    "T": gates.build_t,
    "Ktri": gates.build_t,
    "Kpool3": gates.build_k_pool,
}


@dataclass(frozen=True, eq=False)
class QcnnModel:
    task: str
    params: np.ndarray = field(repr=False)

    def __post_init__(self):
        _check_task(self.task)
        p = np.asarray(self.params, dtype=float).ravel()
        n = param_count(self.task)
        if p.size != n:
            raise SizeError(f"{self.task} model needs {n} parameters, got {p.size}")
        object.__setattr__(self, "params", p)

    @classmethod
    def zeros(cls, task):
        return cls(task, np.zeros(param_count(task)))

    @classmethod
    def random(cls, task, rng, scale=np.pi / 10):
        return cls(task, rng.uniform(-scale, scale, param_count(task)))

    def with_params(self, params):
        return QcnnModel(self.task, params)

    def gate_unitaries(self):
        """``[(wires0, U), ...]`` in application order, wires 0-based."""
        out = []
        for spec in gate_layout(self.task):
            u = _BUILDERS[spec.kind](self.params[spec.param_slice()])
            out.append((tuple(_wire(w) for w in spec.wires), u))
        return out

    def to_json(self):
        return json.dumps(
            {"task": self.task, "params": [float(x) for x in self.params], "wiring_version": WIRING_VERSION},
            indent=1,
        )

    def save(self, path):
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path):
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc.msg}", exc.lineno) from exc
        if data.get("wiring_version") != WIRING_VERSION:
            raise ParseError(f"{path}: unsupported wiring_version {data.get('wiring_version')!r}")
        return cls(data["task"], data["params"])


def apply_gate(psi, gate, wires):
    """Apply a ``2^k`` gate to a batch of statevectors shaped ``(r, 2, ..., 2)``."""
    k = len(wires)
    axes = [w + 1 for w in wires]
    moved = np.moveaxis(psi, axes, list(range(psi.ndim - k, psi.ndim)))
    shape = moved.shape
    flat = moved.reshape(shape[: psi.ndim - k] + (2**k,)) @ gate.T
    return np.moveaxis(flat.reshape(shape), list(range(psi.ndim - k, psi.ndim)), axes)


def evolve_states(psis, model: QcnnModel):
    """Run the unitary part of the circuit on a batch of ``(r, 512)`` statevectors."""
    psis = np.asarray(psis, dtype=complex)
    if psis.ndim == 1:
        psis = psis[None]
    if psis.shape[1] != 2**N_QUBITS:
        raise SizeError(f"expected {2**N_QUBITS}-dim states, got {psis.shape[1]}")
    t = psis.reshape((len(psis),) + (2,) * N_QUBITS)
    for wires, u in model.gate_unitaries():
        t = apply_gate(t, u, wires)
    return t.reshape(len(psis), -1)


def circuit_unitary(model: QcnnModel):
    """Full ``512 x 512`` circuit unitary (columns = images of basis states)."""
    return evolve_states(np.eye(2**N_QUBITS), model).T


def reduce_pure(psis, keep):
    """Reduced density matrices ``(r, 2^k, 2^k)`` of pure states on ``keep`` (0-based)."""
    r = len(psis)
    t = psis.reshape((r,) + (2,) * N_QUBITS)
    keep_axes = [k + 1 for k in keep]
    t = np.moveaxis(t, keep_axes, list(range(N_QUBITS + 1 - len(keep), N_QUBITS + 1)))
    t = t.reshape(r, -1, 2 ** len(keep))
    return np.einsum("ira,irb->iab", t, t.conj())


def apply_channel_pure(psis, model: QcnnModel):
    """``Phi(|psi><psi|)`` for each statevector in a batch. Fast path for datasets."""
    keep = [_wire(q) for q in output_qubits(model.task)]
    return reduce_pure(evolve_states(psis, model), keep)


def apply_channel(rho_in, model: QcnnModel):
    """``Phi(rho)`` for a ``512 x 512`` density matrix."""
    rho_in = np.asarray(rho_in, dtype=complex)
    if rho_in.shape != (2**N_QUBITS, 2**N_QUBITS):
        raise SizeError(f"expected a 512x512 density matrix, got {rho_in.shape}")
    u = circuit_unitary(model)
    keep = [_wire(q) for q in output_qubits(model.task)]
    return linalg.partial_trace(u @ rho_in @ u.conj().T, [2] * N_QUBITS, keep)

"""Parameterized gates of the QCNN and of the two-qubit projector family.

Qubit order inside every multi-qubit gate: the first listed wire is the most
significant tensor factor (leftmost in a Kronecker product).
"""

import numpy as np

from .states import PAULI_X, PAULI_Y, PAULI_Z

_I2 = np.eye(2, dtype=complex)
_P0 = np.diag([1, 0]).astype(complex)
_P1 = np.diag([0, 1]).astype(complex)

V_PARAMS = 3
W_PARAMS = 15
T_PARAMS = 45
KPOOL_PARAMS = 6


def _exp_pauli(angle, pauli):
    """``exp(-i * angle * P)`` for any operator with ``P @ P = I``."""
    eye = np.eye(pauli.shape[0], dtype=complex)
    return np.cos(angle) * eye - 1j * np.sin(angle) * pauli


def _check_len(p, n, what):
    p = np.asarray(p, dtype=float).ravel()
    if p.size != n:
        raise ValueError(f"{what} takes {n} parameters, got {p.size}")
    return p


def build_v(p):
    """Single-qubit ``V = exp(-i p0 Z) exp(-i p1 Y) exp(-i p2 X)``."""
    p = _check_len(p, V_PARAMS, "V")
    return _exp_pauli(p[0], PAULI_Z) @ _exp_pauli(p[1], PAULI_Y) @ _exp_pauli(p[2], PAULI_X)


ZZ = np.kron(PAULI_Z, PAULI_Z)
YY = np.kron(PAULI_Y, PAULI_Y)
XX = np.kron(PAULI_X, PAULI_X)


def two_qubit_entangler(theta):
    """``exp(-i (t0 ZZ + t1 YY + t2 XX))``; the three terms commute."""
    t = _check_len(theta, 3, "entangler")
    return _exp_pauli(t[0], ZZ) @ _exp_pauli(t[1], YY) @ _exp_pauli(t[2], XX)


def build_w(p):
    """Two-qubit ``W = (V_a (x) V_b) exp(-i theta.(ZZ, YY, XX)) (V_c (x) V_d)``.

    Layout: ``p[0:6]`` outer V pair, ``p[6:9]`` theta, ``p[9:15]`` inner V pair.
    This is also the unitary of the 15-parameter two-qubit projector family.
    """
    p = _check_len(p, W_PARAMS, "W")
    outer = np.kron(build_v(p[0:3]), build_v(p[3:6]))
    inner = np.kron(build_v(p[9:12]), build_v(p[12:15]))
    return outer @ two_qubit_entangler(p[6:9]) @ inner


def embed(gate, wires, n_qubits):
    """Dense ``2^n`` matrix of ``gate`` acting on ``wires`` (0-based, in gate order)."""
    k = len(wires)
    g = np.asarray(gate, dtype=complex).reshape((2,) * (2 * k))
    full = np.eye(2**n_qubits, dtype=complex).reshape((2,) * (2 * n_qubits))
    # act on the row (output) indices of the identity
    out_axes = list(wires)
    moved = np.tensordot(g, full, axes=(list(range(k, 2 * k)), out_axes))
    # tensordot puts the gate's output axes first; restore wire positions
    moved = np.moveaxis(moved, list(range(k)), out_axes)
    return moved.reshape(2**n_qubits, 2**n_qubits)


def build_t(p):
    """Three-qubit ``T = W^(3,1) W^(2,3) W^(1,2)``.

    ``p[0:15]`` drives ``W^(1,2)`` (applied first), ``p[15:30]`` ``W^(2,3)``
    and ``p[30:45]`` ``W^(3,1)``, whose first factor sits on wire 3.
    """
    p = _check_len(p, T_PARAMS, "T")
    w12 = embed(build_w(p[0:15]), (0, 1), 3)
    w23 = embed(build_w(p[15:30]), (1, 2), 3)
    w31 = embed(build_w(p[30:45]), (2, 0), 3)
    return w31 @ w23 @ w12


def build_k_pool(p):
    """Three-qubit pooling gate.

    ``K = (1 (x) 1 (x) |0><0| + 1 (x) V_a (x) |1><1|)(|0><0| (x) 1 (x) 1 + |1><1| (x) V_b (x) 1)``
    with ``V_a = V(p[0:3])`` controlled by the third qubit and ``V_b = V(p[3:6])``
    controlled by the first. Both act on the middle qubit.
    """
    p = _check_len(p, KPOOL_PARAMS, "K pool")
    va = build_v(p[0:3])
    vb = build_v(p[3:6])
    left = np.kron(np.kron(_I2, _I2), _P0) + np.kron(np.kron(_I2, va), _P1)
    right = np.kron(np.kron(_P0, _I2), _I2) + np.kron(np.kron(_P1, vb), _I2)
    return left @ right

"""Cluster-Ising chain: Hamiltonian, exact ground states, grids, phase labels.

    H = -J sum_n Z_n X_{n+1} Z_{n+2} - h1 sum_n X_n - h2 sum_n X_n X_{n+1}

with open boundaries. All terms are real in the computational basis, so the
Hamiltonian is built as a real symmetric matrix.
"""

import csv
import functools
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from .errors import ConfigurationError, ParseError, SizeError

log = logging.getLogger(__name__)

MAX_SITES = 12
GRID_SIZE = 64
N_DEFAULT = 9
N_TRAIN = 40
DEGENERACY_GAP = 1e-10

_I = np.eye(2)
_X = np.array([[0.0, 1.0], [1.0, 0.0]])
_Z = np.array([[1.0, 0.0], [0.0, -1.0]])


@dataclass(frozen=True)
class SpinChainPoint:
    N: int
    J: float
    h1: float
    h2: float

    def __post_init__(self):
        if self.N < 3:
            raise SizeError(f"cluster-Ising chain needs N >= 3, got {self.N}")

    @property
    def x(self):
        """``(h1/J, h2/J)``; undefined for J <= 0."""
        if self.J <= 0:
            raise ValueError("x = (h1/J, h2/J) requires J > 0")
        return (self.h1 / self.J, self.h2 / self.J)


@dataclass(frozen=True, eq=False)
class GroundState:
    point: SpinChainPoint
    energy: float
    vector: np.ndarray = field(repr=False)
    degenerate: bool = False
    gap: float = float("inf")


def _pauli_string(ops, n):
    """Kronecker product of ``ops`` (a ``{site: 2x2}`` dict) with identities elsewhere."""
    out = np.ones((1, 1))
    for k in range(n):
        out = np.kron(out, ops.get(k, _I))
    return out


@functools.lru_cache(maxsize=4)
def _terms(n):
    """The three coupling sums ``(sum ZXZ, sum X, sum XX)``, built once per chain length."""
    zxz = sum(_pauli_string({k: _Z, k + 1: _X, k + 2: _Z}, n) for k in range(n - 2))
    x = sum(_pauli_string({k: _X}, n) for k in range(n))
    xx = sum(_pauli_string({k: _X, k + 1: _X}, n) for k in range(n - 1))
    for t in (zxz, x, xx):
        t.setflags(write=False)
    return zxz, x, xx


def build_hamiltonian(p: SpinChainPoint):
    """Dense real-symmetric ``2^N x 2^N`` Hamiltonian."""
    n = p.N
    if n > MAX_SITES:
        raise SizeError(f"dense Hamiltonian limited to N <= {MAX_SITES}, got {n}")
    zxz, x, xx = _terms(n)
    return -p.J * zxz - p.h1 * x - p.h2 * xx


def _fix_phase(v):
    k = int(np.argmax(np.abs(v)))
    return v * (np.conj(v[k]) / abs(v[k]))


def ground_state(p: SpinChainPoint):
    """Lowest eigenpair of ``H(p)``.

    The global phase is fixed by making the largest-magnitude amplitude real and
    positive. A gap below 1e-10 to the next level sets ``degenerate``; the
    solver's first vector is still returned.
    """
    h = build_hamiltonian(p)
    w, v = scipy.linalg.eigh(h, subset_by_index=[0, 1])
    vec = _fix_phase(v[:, 0].astype(complex))
    gap = float(w[1] - w[0])
    return GroundState(p, float(w[0]), vec, gap < DEGENERACY_GAP, gap)


def eigen_residual(gs: GroundState):
    h = build_hamiltonian(gs.point)
    return float(np.linalg.norm(h @ gs.vector - gs.energy * gs.vector))


def grid_coordinates():
    """``(4096, 2)`` array of ``(h1/J, h2/J)`` in row-major order ``i = 64 n + m``."""
    n, m = np.meshgrid(np.arange(GRID_SIZE), np.arange(GRID_SIZE), indexing="ij")
    h1 = 1.6 * n.ravel() / 63
    h2 = -1.6 + 3.2 * m.ravel() / 63
    return np.stack([h1, h2], axis=1)


def grid_index(n, m):
    return GRID_SIZE * n + m


def grid_nm(i):
    return divmod(i, GRID_SIZE)


def grid_points(N=N_DEFAULT):
    return [SpinChainPoint(N, 1.0, float(a), float(b)) for a, b in grid_coordinates()]


def training_coordinates():
    i = np.arange(N_TRAIN)
    return np.stack([np.ones(N_TRAIN), -1.6 + 3.2 * i / 39], axis=1)


def training_points(N=N_DEFAULT):
    return [SpinChainPoint(N, 1.0, float(a), float(b)) for a, b in training_coordinates()]


def _gs_worker(args):
    from threadpoolctl import threadpool_limits

    point = SpinChainPoint(*args)
    with threadpool_limits(1):
        gs = ground_state(point)
    return gs.energy, gs.vector, gs.degenerate


def worker_count():
    env = os.environ.get("QIS_THREADS")
    n = os.cpu_count() or 1
    if env:
        try:
            n = max(1, min(n, int(env)))
        except ValueError:
            raise ConfigurationError(f"QIS_THREADS must be an integer, got {env!r}") from None
    return n


def ground_states(points, workers=None):
    """Ground states for many points; results come back in input order."""
    points = list(points)
    workers = worker_count() if workers is None else workers
    args = [(p.N, p.J, p.h1, p.h2) for p in points]
    if workers <= 1 or len(points) < 8:
        results = map(_gs_worker, args)
        results = list(results)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_gs_worker, args, chunksize=32))
    return [GroundState(p, e, v, d) for p, (e, v, d) in zip(points, results)]


# --- phase labels ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PhaseBoundaries:
    """Piecewise-linear SPT boundaries ``h2_lower(h1) < h2/J < h2_upper(h1)``."""

    h1: np.ndarray
    upper: np.ndarray
    lower: np.ndarray

    def at(self, h1):
        h1 = np.asarray(h1, dtype=float)
        return (_interp_linear(h1, self.h1, self.upper), _interp_linear(h1, self.h1, self.lower))

    @classmethod
    def builtin_linear(cls):
        """Default curves anchored at the known boundary values.

        At ``h1/J = 1`` the SPT window is ``-1.15 < h2/J < 0``. At ``h1 = 0``
        the chain is self-dual and the transitions sit at ``h2/J = +-1``. The
        curves are straight lines through these anchors, extended to 1.6.
        """
        h1 = np.array([0.0, 1.0, 1.6])
        upper = np.array([1.0, 0.0, -0.6])
        lower = np.array([-1.0, -1.15, -1.24])
        return cls(h1, upper, lower)

    @classmethod
    def from_csv(cls, path):
        """Read a ``h1_over_J, h2_upper, h2_lower`` CSV (header required)."""
        rows = []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            expected = ["h1_over_J", "h2_upper", "h2_lower"]
            if header is None or [h.strip() for h in header] != expected:
                raise ParseError(f"{path}: header must be {','.join(expected)}", 1)
            for lineno, row in enumerate(reader, start=2):
                if not row or all(not c.strip() for c in row):
                    continue
                if len(row) != 3:
                    raise ParseError(f"{path}: expected 3 columns, got {len(row)}", lineno)
                try:
                    rows.append([float(c) for c in row])
                except ValueError:
                    raise ParseError(f"{path}: non-numeric value in {row}", lineno) from None
        if len(rows) < 1:
            raise ParseError(f"{path}: no boundary rows")
        a = np.array(sorted(rows))
        if np.any(np.diff(a[:, 0]) <= 0):
            raise ParseError(f"{path}: h1_over_J values must be distinct")
        return cls(a[:, 0], a[:, 1], a[:, 2])


def _interp_linear(x, xp, fp):
    """Piecewise-linear interpolation, linearly extrapolated past the ends."""
    if len(xp) == 1:
        return np.full_like(x, fp[0], dtype=float)
    y = np.interp(x, xp, fp)
    lo_slope = (fp[1] - fp[0]) / (xp[1] - xp[0])
    hi_slope = (fp[-1] - fp[-2]) / (xp[-1] - xp[-2])
    y = np.where(x < xp[0], fp[0] + lo_slope * (x - xp[0]), y)
    return np.where(x > xp[-1], fp[-1] + hi_slope * (x - xp[-1]), y)


def load_boundaries(source):
    if source in (None, "builtin-linear"):
        return PhaseBoundaries.builtin_linear()
    return PhaseBoundaries.from_csv(source)


SPT, PARAMAGNETIC, ANTIFERROMAGNETIC = 0, 2, 3


def ground_truth_label(x, task, boundaries=None):
    """Phase label(s) for ``x = (h1/J, h2/J)`` (single pair or ``(k, 2)`` array).

    2-class: 0 inside the SPT window, 1 elsewhere. 3-class: 0 SPT,
    2 paramagnetic (``h2 >= upper``), 3 antiferromagnetic (``h2 <= lower``).
    """
    if boundaries is None:
        boundaries = PhaseBoundaries.builtin_linear()
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    upper, lower = boundaries.at(x[:, 0])
    h2 = x[:, 1]
    spt = (h2 > lower) & (h2 < upper)
    if task == "2-class":
        labels = np.where(spt, 0, 1)
    elif task == "3-class":
        labels = np.where(h2 >= upper, PARAMAGNETIC, np.where(spt, SPT, ANTIFERROMAGNETIC))
    else:
        raise ValueError(f"unknown task {task!r}")
    return int(labels[0]) if single else labels


# --- datasets -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LabeledStates:
    """Statevectors with their parameter points and labels."""

    xs: np.ndarray
    vectors: np.ndarray
    labels: np.ndarray

    def __len__(self):
        return len(self.labels)

    def subset(self, idx):
        idx = np.asarray(idx)
        return LabeledStates(self.xs[idx], self.vectors[idx], self.labels[idx])


TEST_COUNTS = {
    ("2-class", "unbiased"): {0: 750, 1: 750},
    ("2-class", "biased"): {0: 1480, 1: 20},
    ("3-class", "unbiased"): {0: 500, 1: 0, 2: 500, 3: 500},
    ("3-class", "biased"): {0: 1480, 1: 0, 2: 10, 3: 10},
}


def sample_test_set(pool: LabeledStates, task, scenario, seed):
    """Draw the 1500-sample test set with replacement from ``pool``.

    Samples are grouped by label in ascending label order. The same seed always
    yields the same index sequence.
    """
    try:
        counts = TEST_COUNTS[(task, scenario)]
    except KeyError:
        raise ConfigurationError(f"unknown task/scenario {task!r}/{scenario!r}") from None
    rng = np.random.default_rng(seed)
    picks = []
    for label, count in counts.items():
        if count == 0:
            continue
        candidates = np.flatnonzero(pool.labels == label)
        if len(candidates) == 0:
            raise ConfigurationError(f"no pool state carries label {label} for {task}")
        picks.append(rng.choice(candidates, size=count, replace=True))
    return pool.subset(np.concatenate(picks))

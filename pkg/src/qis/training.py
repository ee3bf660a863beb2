"""SPSA training of the QCNN on the cross-entropy loss, plus accuracy."""

import csv
import io
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteLossError
from .ising import LabeledStates
from .qcnn import QcnnModel, apply_channel_pure
from .states import MeasurementFamily, measure_probs, x_basis

log = logging.getLogger(__name__)

PROB_FLOOR = 1e-12


@dataclass
class SpsaConfig:
    iterations: int = 1500
    a: float = 0.2
    c: float = 0.1
    A: float = 150.0
    alpha: float = 0.602
    gamma_exp: float = 0.101
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if not (self.a > 0 and self.c > 0):
            raise ValueError("SPSA gains a and c must be positive")
        if not (0 < self.alpha <= 1 and 0 < self.gamma_exp <= 1):
            raise ValueError("alpha and gamma_exp must lie in (0, 1]")

    def gains(self, k):
        """``(a_k, c_k)`` for 0-based step ``k``."""
        return self.a / (k + 1 + self.A) ** self.alpha, self.c / (k + 1) ** self.gamma_exp


@dataclass
class SpsaTrace:
    x: np.ndarray
    losses: list
    grad_norms: list


def spsa(f, x0, cfg: SpsaConfig):
    """Minimize ``f`` with simultaneous perturbation stochastic approximation.

    Each step draws a Rademacher vector ``delta`` and uses
    ``g = (f(x + c_k delta) - f(x - c_k delta)) / (2 c_k) * delta``. The trace
    holds ``f`` at the start and after every step (``iterations + 1`` values).
    """
    rng = np.random.default_rng(cfg.seed)
    x = np.array(x0, dtype=float)
    fx = f(x)
    if not np.isfinite(fx):
        raise NonFiniteLossError(0)
    losses, grad_norms = [float(fx)], [0.0]
    for k in range(cfg.iterations):
        ak, ck = cfg.gains(k)
        delta = rng.choice((-1.0, 1.0), size=x.size)
        fp = f(x + ck * delta)
        fm = f(x - ck * delta)
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise NonFiniteLossError(k + 1)
        g = (fp - fm) / (2 * ck) * delta
        x = x - ak * g
        fx = f(x)
        if not np.isfinite(fx):
            raise NonFiniteLossError(k + 1)
        losses.append(float(fx))
        grad_norms.append(float(np.linalg.norm(g)))
    return SpsaTrace(x, losses, grad_norms)


def training_projectors(task):
    """Fixed X-type label projectors: ``|+>,|->`` or ``|++>,|+->,|-+>,|-->``."""
    return x_basis(1 if task == "2-class" else 2)


def output_probabilities(model: QcnnModel, data: LabeledStates, projectors: MeasurementFamily):
    return measure_probs(apply_channel_pure(data.vectors, model), projectors)


def loss_from_probs(probs, labels):
    """``-(1/r) sum_i ln p(y_i|x_i) + ln r`` with the probabilities floored."""
    r = len(labels)
    p = np.maximum(probs[np.arange(r), labels], PROB_FLOOR)
    return float(-np.mean(np.log(p)) + np.log(r))


def cross_entropy_loss(model: QcnnModel, data: LabeledStates, projectors: MeasurementFamily):
    return loss_from_probs(output_probabilities(model, data, projectors), data.labels)


@dataclass
class TrainedModel:
    model: QcnnModel
    loss_trace: list
    final_loss: float
    grad_norms: list = field(default_factory=list)

    def log_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "loss", "grad_norm"])
        for k, (loss, g) in enumerate(zip(self.loss_trace, self.grad_norms)):
            w.writerow([k, repr(loss), repr(g)])
        return buf.getvalue()


def spsa_minimize(initial: QcnnModel, data: LabeledStates, projectors: MeasurementFamily, cfg: SpsaConfig):
    """Train ``initial`` on ``data``; deterministic for a fixed ``cfg.seed``."""

    def f(params):
        return cross_entropy_loss(initial.with_params(params), data, projectors)

    trace = spsa(f, initial.params, cfg)
    log.info("SPSA %s: loss %.5f -> %.5f", initial.task, trace.losses[0], trace.losses[-1])
    return TrainedModel(initial.with_params(trace.x), trace.losses, trace.losses[-1], trace.grad_norms)


def accuracy_from_probs(probs, labels):
    return float(np.mean(np.argmax(probs, axis=1) == np.asarray(labels)))


def accuracy(model: QcnnModel, data: LabeledStates, projectors: MeasurementFamily):
    """Fraction of argmax predictions matching the labels (ties -> lowest label)."""
    return accuracy_from_probs(output_probabilities(model, data, projectors), data.labels)

"""Reproduction pipeline: ground-state caches, training, metric tables, phase diagrams.

Every CSV written here starts with one comment line carrying the command, the
seed and the SHA-256 of the remaining bytes, so reruns can be diffed directly.
"""

import csv
import hashlib
import io
import json
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import cache, ising, metrics, qcnn, search, training
from .errors import ConfigurationError, OrderingError
from .ising import LabeledStates
from .states import Ensemble

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-8


@dataclass
class Paths:
    cache_dir: str = "cache"
    output: str = "out"
    model: Optional[str] = None


@dataclass
class ExperimentConfig:
    task: str = "2-class"
    scenario: str = "unbiased"
    seed: int = 0
    N: int = ising.N_DEFAULT
    boundary_source: str = "builtin-linear"
    test_pool: str = "grid"
    write_ppm: bool = False
    paths: Paths = field(default_factory=Paths)
    spsa: training.SpsaConfig = field(default_factory=training.SpsaConfig)
    axis_search: search.SearchConfig = field(default_factory=search.SearchConfig)
    base_dir: Path = field(default=Path("."), repr=False, compare=False)

    def __post_init__(self):
        if self.task not in qcnn.TASKS:
            raise ConfigurationError(f"task must be one of {qcnn.TASKS}, got {self.task!r}")
        if self.scenario not in ("unbiased", "biased"):
            raise ConfigurationError(f"scenario must be unbiased or biased, got {self.scenario!r}")
        if self.test_pool not in ("grid", "line"):
            raise ConfigurationError(f"test_pool must be grid or line, got {self.test_pool!r}")
        if not 3 <= self.N <= ising.MAX_SITES:
            raise ConfigurationError(f"N must lie in [3, {ising.MAX_SITES}]")

    @classmethod
    def from_dict(cls, data, base_dir=Path(".")):
        data = dict(data)
        known = {f.name for f in fields(cls)} - {"base_dir"}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        if "seed" in data.get("spsa", {}):
            raise ConfigurationError("spsa.seed is derived from the top-level seed; set `seed` instead")
        try:
            paths = Paths(**data.pop("paths", {}))
            spsa = training.SpsaConfig(**data.pop("spsa", {}))
            axis = search.SearchConfig(**data.pop("axis_search", {}))
            return cls(paths=paths, spsa=spsa, axis_search=axis, base_dir=Path(base_dir), **data)
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from exc
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from exc

    @classmethod
    def load(cls, path):
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except FileNotFoundError:
            raise ConfigurationError(f"config file {path} not found") from None
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: line {exc.lineno}: {exc.msg}") from None
        return cls.from_dict(data, base_dir=path.parent)

    def to_dict(self):
        d = asdict(self)
        d.pop("base_dir")
        return d

    def _resolve(self, p):
        p = Path(p)
        return p if p.is_absolute() else self.base_dir / p

    @property
    def cache_dir(self):
        return self._resolve(self.paths.cache_dir)

    @property
    def out_dir(self):
        return self._resolve(self.paths.output)

    def model_path(self, task=None):
        task = task or self.task
        if self.paths.model and task == self.task:
            return self._resolve(self.paths.model)
        return self.out_dir / f"model_{task}.json"

    def grid_cache(self):
        return self.cache_dir / f"grid_N{self.N}.qgs"

    def train_cache(self):
        return self.cache_dir / f"train_N{self.N}.qgs"

    def axes_path(self, scenario=None):
        return self.out_dir / f"axes_{self.task}_{scenario or self.scenario}.json"

    def boundaries(self):
        src = self.boundary_source
        if src != "builtin-linear":
            src = self._resolve(src)
        return ising.load_boundaries(src)


# --- output helpers -------------------------------------------------------------


def csv_text(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerows(rows)
    return buf.getvalue()


def write_csv(path, rows, command, seed):
    body = csv_text(rows)
    digest = hashlib.sha256(body.encode()).hexdigest()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(f"# qis {command} seed={seed} sha256={digest}\n" + body)
    return path


def read_csv(path):
    """Rows of a CSV written by :func:`write_csv`, comment line skipped."""
    lines = Path(path).read_text().splitlines()
    return list(csv.reader(line for line in lines if not line.startswith("#")))


def _f(x):
    return repr(float(x))


def write_ppm(path, labels, palette):
    """Binary P6 raster, one pixel per grid point; h2 grows upward, h1 rightward."""
    grid = np.asarray(labels).reshape(ising.GRID_SIZE, ising.GRID_SIZE)  # [n (h1), m (h2)]
    img = np.zeros((ising.GRID_SIZE, ising.GRID_SIZE, 3), dtype=np.uint8)
    for label, color in palette.items():
        img[grid.T[::-1] == label] = color
    header = f"P6\n{ising.GRID_SIZE} {ising.GRID_SIZE}\n255\n".encode()
    Path(path).write_bytes(header + img.tobytes())


# --- gen-states -----------------------------------------------------------------


def _compute_table(points, workers=None):
    gss = ising.ground_states(points, workers)
    n = points[0].N
    return cache.GroundStateTable(
        n,
        np.array([p.x for p in points]),
        np.array([g.energy for g in gss]),
        np.array([g.degenerate for g in gss]),
        np.array([g.vector for g in gss]),
    )


def residuals(table: cache.GroundStateTable):
    """``||H v - E v||`` for every record of a cache table (recomputes each H)."""
    out = np.empty(len(table))
    for i, (x, e, v) in enumerate(zip(table.xs, table.energies, table.vectors)):
        h = ising.build_hamiltonian(ising.SpinChainPoint(table.N, 1.0, float(x[0]), float(x[1])))
        out[i] = np.linalg.norm(h @ v - e * v)
    return out


def cmd_gen_states(cfg: ExperimentConfig, workers=None, audit=True):
    """Write the 4096-point grid cache and the 40-point training cache.

    Returns ``{"grid": bool, "train": bool}`` telling which files were (re)built.
    """
    built = {}
    jobs = {
        "grid": (cfg.grid_cache(), ising.grid_points(cfg.N)),
        "train": (cfg.train_cache(), ising.training_points(cfg.N)),
    }
    summary = [["set", "count", "max_residual", "degenerate"]]
    for name, (path, points) in jobs.items():
        if cache.is_valid(path, N=cfg.N, count=len(points)):
            log.info("cache %s is valid; skipping", path)
            built[name] = False
            continue
        log.info("computing %d ground states for %s", len(points), path)
        table = _compute_table(points, workers)
        if audit:
            res = residuals(table)
            worst = float(res.max())
            if worst >= RESIDUAL_TOL:
                raise ConfigurationError(f"eigen-residual {worst:.2e} exceeds {RESIDUAL_TOL:.0e} in {path}")
            summary.append([name, len(table), _f(worst), int(table.degenerate.sum())])
        cache.write(path, table)
        built[name] = True
    if len(summary) > 1:
        write_csv(cfg.out_dir / "gen_states.csv", summary, "gen-states", cfg.seed)
    return built


def _load_table(path):
    if not cache.is_valid(path):
        raise ConfigurationError(f"ground-state cache {path} missing or invalid; run `qis gen-states` first")
    return cache.read(path)


def labeled(table: cache.GroundStateTable, task, boundaries):
    return LabeledStates(table.xs, table.vectors, ising.ground_truth_label(table.xs, task, boundaries))


def training_data(cfg: ExperimentConfig, task=None):
    return labeled(_load_table(cfg.train_cache()), task or cfg.task, cfg.boundaries())


def grid_data(cfg: ExperimentConfig, task=None):
    return labeled(_load_table(cfg.grid_cache()), task or cfg.task, cfg.boundaries())


# --- train ----------------------------------------------------------------------


def _seeds(seed):
    init, opt = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(init), int(opt.generate_state(1)[0])


def cmd_train(cfg: ExperimentConfig):
    data = training_data(cfg)
    init_rng, spsa_seed = _seeds(cfg.seed)
    model0 = qcnn.QcnnModel.random(cfg.task, init_rng)
    spsa_cfg = training.SpsaConfig(**{**asdict(cfg.spsa), "seed": spsa_seed})
    trained = training.spsa_minimize(model0, data, training.training_projectors(cfg.task), spsa_cfg)
    path = cfg.model_path()
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = json.loads(trained.model.to_json())
    doc["seed"] = cfg.seed
    path.write_text(json.dumps(doc, indent=1) + "\n")
    rows = [["iteration", "loss", "grad_norm"]]
    rows += [[k, _f(l), _f(g)] for k, (l, g) in enumerate(zip(trained.loss_trace, trained.grad_norms))]
    write_csv(cfg.out_dir / f"train_log_{cfg.task}.csv", rows, "train", cfg.seed)
    return trained


def load_model(cfg: ExperimentConfig):
    path = cfg.model_path()
    if not path.exists():
        raise ConfigurationError(f"model file {path} not found; run `qis train` first")
    model = qcnn.QcnnModel.load(path)
    if model.task != cfg.task:
        raise ConfigurationError(f"model {path} is for {model.task}, config asks for {cfg.task}")
    return model


# --- evaluate ---------------------------------------------------------------------


@dataclass
class Evaluation:
    report: metrics.MetricReport
    axes: dict
    accuracies: dict
    test_set: LabeledStates
    outputs: np.ndarray


def evaluate_model(model, cfg: ExperimentConfig, grid: LabeledStates = None, line: LabeledStates = None):
    """All Table-III style metrics for one (task, scenario)."""
    task = model.task
    grid = grid if grid is not None else grid_data(cfg, task)
    pool = grid if cfg.test_pool == "grid" else (line if line is not None else training_data(cfg, task))
    family = metrics.family_for_dim(qcnn.output_dim(task))

    grid_out = qcnn.apply_channel_pure(grid.vectors, model)
    hi = metrics.high_accuracy_axis(grid_out, grid.labels, family, cfg.axis_search)

    test = ising.sample_test_set(pool, task, cfg.scenario, cfg.seed)
    # the pool outputs are already known when sampling from the grid
    if cfg.test_pool == "grid":
        lookup = {tuple(x): i for i, x in enumerate(grid.xs)}
        outs = grid_out[[lookup[tuple(x)] for x in test.xs]]
    else:
        outs = qcnn.apply_channel_pure(test.vectors, model)
    ens = Ensemble.uniform(outs)

    axes = metrics.named_axes(family.dim)
    axes["highacc"] = hi.params
    acc = metrics.accessible_is(ens, family, cfg.axis_search, extra_starts=[hi.params])
    axes["opt"] = acc.params

    xi_q = metrics.quantum_is(ens)
    xi_c = {name: metrics.classical_is(ens, family.from_params(p).measurement()) for name, p in axes.items()}
    ratios = {name: v / xi_q for name, v in xi_c.items()}
    report = metrics.MetricReport(
        cfg.scenario,
        task,
        xi_q,
        acc.value,
        xi_c,
        ratios["X"],
        n_labels=family.dim,
        axis_params={k: v.tolist() for k, v in axes.items()},
    )
    accuracies = {
        name: float(np.mean(metrics.predicted_labels(grid_out, family, p) == grid.labels))
        for name, p in axes.items()
    }
    eval_axes = {
        "task": task,
        "scenario": cfg.scenario,
        "seed": cfg.seed,
        "params": {k: [float(a) for a in v] for k, v in axes.items()},
        "efficacy_ratio": ratios,
        "grid_accuracy": accuracies,
        "accessible_converged": bool(acc.converged),
    }
    return Evaluation(report, eval_axes, accuracies, test, outs)


def cmd_evaluate(cfg: ExperimentConfig):
    """Compute and write the metric row; raises :class:`OrderingError` before writing on violation."""
    model = load_model(cfg)
    ev = evaluate_model(model, cfg)
    ev.report.check_ordering()
    rows = [list(metrics.CSV_COLUMNS), ev.report.csv_row()]
    write_csv(cfg.out_dir / f"metrics_{cfg.task}_{cfg.scenario}.csv", rows, "evaluate", cfg.seed)
    cfg.axes_path().write_text(json.dumps(ev.axes, indent=1, sort_keys=True) + "\n")
    return ev


# --- phase diagram -------------------------------------------------------------------

PALETTE = {0: (94, 60, 153), 1: (253, 231, 37), 2: (33, 145, 140), 3: (59, 82, 139)}


def cmd_phase_diagram(cfg: ExperimentConfig):
    """Predicted label per grid point for each axis; highacc/opt come from the unbiased run."""
    axes_file = cfg.axes_path("unbiased")
    if not axes_file.exists():
        raise ConfigurationError(
            f"axis parameters {axes_file} not found; run `qis evaluate` with scenario=unbiased first"
        )
    axes = json.loads(axes_file.read_text())["params"]
    model = load_model(cfg)
    grid = grid_data(cfg)
    line = training_data(cfg)
    family = metrics.family_for_dim(qcnn.output_dim(cfg.task))
    grid_out = qcnn.apply_channel_pure(grid.vectors, model)
    line_out = qcnn.apply_channel_pure(line.vectors, model)

    rows = [["axis", "index", "n", "m", "h1_over_J", "h2_over_J", "true_label", "predicted_label"]]
    acc_rows = [["axis", "accuracy_grid", "accuracy_line"]]
    result = {}
    for name in ("X", "Z", "highacc", "opt"):
        params = np.asarray(axes[name])
        pred = metrics.predicted_labels(grid_out, family, params)
        pred_line = metrics.predicted_labels(line_out, family, params)
        for i, (x, t, p) in enumerate(zip(grid.xs, grid.labels, pred)):
            n, m = ising.grid_nm(i)
            rows.append([name, i, n, m, _f(x[0]), _f(x[1]), int(t), int(p)])
        a_grid = float(np.mean(pred == grid.labels))
        a_line = float(np.mean(pred_line == line.labels))
        acc_rows.append([name, _f(a_grid), _f(a_line)])
        result[name] = {"grid": a_grid, "line": a_line, "predicted": pred}
        if cfg.write_ppm:
            cfg.out_dir.mkdir(parents=True, exist_ok=True)
            write_ppm(cfg.out_dir / f"phase_{cfg.task}_{name}.ppm", pred, PALETTE)
    write_csv(cfg.out_dir / f"phase_{cfg.task}.csv", rows, "phase-diagram", cfg.seed)
    write_csv(cfg.out_dir / f"phase_accuracy_{cfg.task}.csv", acc_rows, "phase-diagram", cfg.seed)
    return result


# --- bloch dump ------------------------------------------------------------------------

HIST_BINS = 40


def cmd_bloch_dump(cfg: ExperimentConfig):
    """Bloch coordinates of every 2-class test output plus a 40-bin <X> histogram."""
    from .states import bloch_vector

    if cfg.task != "2-class":
        raise ConfigurationError("bloch-dump needs the 2-class task (3-class outputs are two qubits)")
    model = load_model(cfg)
    pool = grid_data(cfg) if cfg.test_pool == "grid" else training_data(cfg)
    test = ising.sample_test_set(pool, cfg.task, cfg.scenario, cfg.seed)
    outs = qcnn.apply_channel_pure(test.vectors, model)
    bloch = bloch_vector(outs)
    exp_x = np.einsum("iab,ba->i", outs, np.array([[0, 1], [1, 0]])).real
    rows = [["index", "h1_over_J", "h2_over_J", "label", "x", "y", "z", "exp_X"]]
    for i, (x, lab, b, ex) in enumerate(zip(test.xs, test.labels, bloch, exp_x)):
        rows.append([i, _f(x[0]), _f(x[1]), int(lab), _f(b[0]), _f(b[1]), _f(b[2]), _f(ex)])
    write_csv(cfg.out_dir / f"bloch_{cfg.scenario}.csv", rows, "bloch-dump", cfg.seed)

    edges = np.linspace(-1.0, 1.0, HIST_BINS + 1)
    hist = [["bin_lo", "bin_hi", "count_label0", "count_label1"]]
    c0, _ = np.histogram(exp_x[test.labels == 0], bins=edges)
    c1, _ = np.histogram(exp_x[test.labels == 1], bins=edges)
    for lo, hi_, a, b in zip(edges[:-1], edges[1:], c0, c1):
        hist.append([_f(lo), _f(hi_), int(a), int(b)])
    write_csv(cfg.out_dir / f"bloch_hist_{cfg.scenario}.csv", hist, "bloch-dump", cfg.seed)
    return bloch, exp_x, test.labels

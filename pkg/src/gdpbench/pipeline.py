"""End-to-end experiment runs.

An experiment config (JSON) names the dataset, period label, light mode,
model family, window spec, hyperparameter grid, and seeds. Running it
executes split -> normalize -> sample -> grid search -> dual-checkpoint
evaluation -> report, writing a CVRun manifest, both checkpoints, and
markdown + CSV reports whose filenames embed a hash of the config, so
reruns of the same config land on the same bytes.

Relative data paths resolve against the GDPBENCH_DATA_ROOT environment
variable when set, else against the config file's directory.
"""

import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .embeddings import load_embeddings
from .errors import ConfigError, ValidationError
from .lights import LIGHT_MODES, LIGHT_NONE, LightTable
from .panel import (
    GDP_ONLY,
    MULTI_INDICATOR,
    PanelSchema,
    SplitPolicy,
    WindowSpec,
    ZVector,
    fit_normalizer,
    load_panel,
    make_regression_samples,
    make_window_samples,
    merge_light_features,
    split_by_time,
)
from .report import MetricSet, ResultRow, emit_report, compute_metrics
from .training import (
    CVConfig,
    LossConfig,
    SCALAR_MSE,
    TrainConfig,
    WEIGHTED_MULTIVARIATE,
    grid_search,
    save_cvrun,
)

DATA_ROOT_ENV = "GDPBENCH_DATA_ROOT"

TASK_REGRESSION = "regression"
TASK_WINDOWED = "windowed"

FAMILY_LABELS = {
    "linear": "Linear Regression",
    "mlp": "MLP",
    "lstm": "LSTM",
    "patch": "PatchTST-style",
    "rt": "RT",
}

LIGHT_LABELS = {
    "none": "×",
    "sum_mean_std": "sum\\mean\\std",
    "mean": "mean",
    "every_month_mean": "every month mean",
}

_REGRESSION_FAMILIES = ("linear", "mlp", "rt")
_WINDOWED_FAMILIES = ("linear", "lstm", "patch")

_KNOWN_KEYS = {
    "dataset", "dataset_label", "indicators", "target", "frequency",
    "period_label", "light_mode", "light_table", "task", "window", "family",
    "model", "grid", "loss", "train", "cv", "seed", "normalization_scope",
    "embeddings", "embedding_key_mode", "output_dir", "timestamp_in_names",
}


@dataclass
class ExperimentConfig:
    dataset: str
    indicators: list
    target: str
    frequency: str
    period_label: str
    family: str
    task: str
    grid: dict
    dataset_label: str = ""
    light_mode: str = LIGHT_NONE
    light_table: str | None = None
    window: dict | None = None
    model: dict = field(default_factory=dict)
    loss: dict = field(default_factory=dict)
    train: dict = field(default_factory=dict)
    cv: dict = field(default_factory=dict)
    seed: int = 0
    normalization_scope: str = "train_and_test"
    embeddings: str | None = None
    embedding_key_mode: str = "static"  # or "per_observation"
    output_dir: str = "out"
    timestamp_in_names: bool = False

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        unknown = set(raw) - _KNOWN_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        missing = [k for k in ("dataset", "indicators", "target", "frequency",
                               "period_label", "family", "task", "grid")
                   if k not in raw]
        if missing:
            raise ConfigError(f"missing config keys {missing}")
        cfg = cls(**{k: raw[k] for k in raw})
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
        return cls.from_dict(raw)

    def validate(self) -> None:
        if self.family not in FAMILY_LABELS:
            raise ConfigError(f"unknown model family {self.family!r}")
        if self.task not in (TASK_REGRESSION, TASK_WINDOWED):
            raise ConfigError(f"unknown task {self.task!r}")
        allowed = _REGRESSION_FAMILIES if self.task == TASK_REGRESSION else _WINDOWED_FAMILIES
        if self.family not in allowed:
            raise ConfigError(
                f"family {self.family!r} does not run the {self.task} task")
        if self.light_mode not in LIGHT_MODES:
            raise ConfigError(f"unknown light mode {self.light_mode!r}")
        if self.light_mode != LIGHT_NONE and not self.light_table:
            raise ConfigError("light_mode set but no light_table given")
        if self.task == TASK_WINDOWED:
            if not self.window or "h" not in self.window:
                raise ConfigError("windowed task needs window: {h, channels}")
            if int(self.window["h"]) < 1:
                raise ConfigError("window length h must be >= 1")
            channels = self.window.get("channels", GDP_ONLY)
            if channels not in (GDP_ONLY, MULTI_INDICATOR):
                raise ConfigError(f"unknown window channels {channels!r}")
        if self.family == "rt" and not self.embeddings:
            raise ConfigError("rt family needs an embeddings file")
        if self.embedding_key_mode not in ("static", "per_observation"):
            raise ConfigError(f"unknown embedding_key_mode {self.embedding_key_mode!r}")
        if not self.grid:
            raise ConfigError("hyperparameter grid must have at least one axis")
        if self.family == "patch":
            h = int(self.window["h"])
            lens = list(self.grid.get("patch_len", []))
            if "patch_len" in self.model:
                lens.append(self.model["patch_len"])
            if not lens:
                raise ConfigError("patch family needs patch_len in model or grid")
            for p in lens:
                if int(p) > h:
                    raise ConfigError(f"patch_len {p} exceeds window h={h}")
        if not isinstance(self.seed, int):
            raise ConfigError("seed must be an integer")

    def hash(self) -> str:
        """Hash of the semantic config: excludes output location and naming."""
        payload = {k: getattr(self, k) for k in sorted(_KNOWN_KEYS)
                   if k not in ("output_dir", "timestamp_in_names")}
        blob = json.dumps(payload, sort_keys=True, default=str).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:12]


def resolve_path(path, base_dir):
    if os.path.isabs(path):
        return path
    root = os.environ.get(DATA_ROOT_ENV) or base_dir
    return os.path.join(root, path)


# ----- sample assembly ---------------------------------------------------------


def _regression_arrays(samples):
    x = np.stack([s.x for s in samples])
    y = np.array([s.y for s in samples], dtype=np.float64)[:, None]
    return x, y


def _window_arrays(samples):
    x = np.stack([s.inputs for s in samples])
    first = samples[0].target
    if isinstance(first, ZVector):
        y = np.stack([s.target.as_array() for s in samples])
    else:
        y = np.array([s.target for s in samples], dtype=np.float64)[:, None]
    return x, y


def _rt_arrays(samples, schema, embedding_set, key_mode):
    names = schema.indicator_names
    values = np.stack([s.x for s in samples])
    if key_mode == "static":
        base = np.stack([embedding_set.vector_for(name) for name in names])
        emb = np.broadcast_to(base, (len(samples),) + base.shape)
    else:
        emb = np.stack([
            np.stack([embedding_set.vector_for(name, f"{s.country}/{s.period}")
                      for name in names])
            for s in samples])
    return (emb, values), np.array([s.y for s in samples], dtype=np.float64)[:, None]


def _split_by_membership(samples, test_periods, period_of):
    train = [s for s in samples if period_of(s) not in test_periods]
    test = [s for s in samples if period_of(s) in test_periods]
    return train, test


def _base_model_config(cfg: ExperimentConfig, dims, out_dim, embed_dim=None):
    model = dict(cfg.model)
    if cfg.family == "linear":
        model.setdefault("ridge_eps", 0.0)
        return model
    if cfg.family == "mlp":
        model["input_dim"] = dims
        model.setdefault("output_dim", out_dim)
        model["hidden"] = tuple(model.get("hidden", (16,)))
        return model
    if cfg.family == "lstm":
        model["input_dim"] = dims
        model["output_dim"] = out_dim
        model.setdefault("hidden_size", 8)
        return model
    if cfg.family == "patch":
        model["window"] = int(cfg.window["h"])
        model["channels"] = dims
        model.setdefault("stride", model.get("patch_len", 1))
        return model
    if cfg.family == "rt":
        model["embed_dim"] = embed_dim
        return model
    raise ConfigError(f"unknown family {cfg.family!r}")


def run_experiment(cfg: ExperimentConfig, base_dir=".", jobs: int = 1) -> dict:
    """Execute one experiment config; returns paths and the CVRun."""
    schema = PanelSchema(tuple(cfg.indicators), cfg.target, cfg.frequency)
    panel = load_panel(resolve_path(cfg.dataset, base_dir), schema)
    if cfg.light_mode != LIGHT_NONE:
        table = LightTable.from_csv(resolve_path(cfg.light_table, base_dir))
        panel = merge_light_features(panel, table, cfg.light_mode)

    policy = SplitPolicy.from_period_label(cfg.period_label)
    train_panel, test_panel = split_by_time(panel, policy)
    normalizer = fit_normalizer(train_panel, test_panel, cfg.normalization_scope)
    norm_panel = normalizer.transform_panel(panel)
    test_periods = set(test_panel.periods)

    embed_dim = None
    if cfg.task == TASK_REGRESSION:
        samples = make_regression_samples(norm_panel)
        train_s, test_s = _split_by_membership(samples, test_periods,
                                               lambda s: s.period)
        if not train_s or not test_s:
            raise ValidationError("split produced an empty train or test sample set")
        if cfg.family == "rt":
            embedding_set = load_embeddings(resolve_path(cfg.embeddings, base_dir))
            embed_dim = embedding_set.dim
            x_train, y_train = _rt_arrays(train_s, norm_panel.schema,
                                          embedding_set, cfg.embedding_key_mode)
            x_test, y_test = _rt_arrays(test_s, norm_panel.schema,
                                        embedding_set, cfg.embedding_key_mode)
        else:
            x_train, y_train = _regression_arrays(train_s)
            x_test, y_test = _regression_arrays(test_s)
        dims = norm_panel.schema.n_indicators
        seq_length = None
    else:
        spec = WindowSpec(h=int(cfg.window["h"]),
                          channels=cfg.window.get("channels", GDP_ONLY),
                          light_mode=cfg.light_mode)
        samples = make_window_samples(norm_panel, spec)
        train_s, test_s = _split_by_membership(samples, test_periods,
                                               lambda s: s.target_period)
        if not train_s or not test_s:
            raise ValidationError("split produced an empty train or test sample set")
        x_train, y_train = _window_arrays(train_s)
        x_test, y_test = _window_arrays(test_s)
        dims = x_train.shape[2]
        seq_length = spec.h

    out_dim = y_train.shape[1]
    loss_cfg = LossConfig(**{"kind": _default_loss_kind(cfg, out_dim),
                             **cfg.loss})
    train_cfg = TrainConfig(**{**cfg.train, "seed": cfg.seed})
    cv_cfg = CVConfig(**cfg.cv)
    base_config = _base_model_config(cfg, dims, out_dim, embed_dim)

    run = grid_search(cfg.family, base_config, cfg.grid,
                      (x_train, y_train), loss_cfg, train_cfg, cv_cfg, jobs=jobs)

    gdp_col = norm_panel.target_col
    label = FAMILY_LABELS[cfg.family]
    metrics = {}
    for tag, ckpt in (("Best Valid Model", run.best_valid_checkpoint),
                      ("Final Model", run.final_checkpoint)):
        preds = np.asarray(ckpt.predict(x_test))
        gdp_pred = normalizer.inverse_column(gdp_col, preds[:, -1])
        gdp_true = normalizer.inverse_column(gdp_col, y_test[:, -1])
        metrics[f"{label} {tag}"] = compute_metrics(gdp_pred, gdp_true)

    row = ResultRow(
        dataset=cfg.dataset_label or os.path.splitext(os.path.basename(cfg.dataset))[0],
        period=cfg.period_label,
        light=LIGHT_LABELS[cfg.light_mode],
        train_count=len(train_s), test_count=len(test_s), dims=dims,
        metrics=metrics, seq_length=seq_length)

    out_dir = cfg.output_dir if os.path.isabs(cfg.output_dir) else os.path.join(
        base_dir, cfg.output_dir)
    os.makedirs(out_dir, exist_ok=True)
    prefix = cfg.hash()
    if cfg.timestamp_in_names:
        import datetime

        stamp = datetime.datetime.now(datetime.timezone.utc).strftime("%Y%m%dT%H%M%SZ")
        prefix = f"{prefix}_{stamp}"

    extra = {
        "config_hash": cfg.hash(),
        "schema_fingerprint": norm_panel.schema.fingerprint(),
        "normalizer": {
            "min": normalizer.col_min.tolist(),
            "max": normalizer.col_max.tolist(),
            "scope": normalizer.fit_scope,
        },
        "report_rows": rows_to_jsonable([row]),
    }
    manifest = save_cvrun(out_dir, run, f"run_{prefix}", extra)
    report_md = emit_report([row], "markdown",
                            os.path.join(out_dir, f"report_{prefix}.md"))
    report_csv = emit_report([row], "csv",
                             os.path.join(out_dir, f"report_{prefix}.csv"))
    return {
        "run": run,
        "row": row,
        "manifest": manifest,
        "report_markdown": report_md,
        "report_csv": report_csv,
        "config_hash": cfg.hash(),
    }


def _default_loss_kind(cfg: ExperimentConfig, out_dim: int) -> str:
    if cfg.task == TASK_WINDOWED and out_dim > 1:
        return WEIGHTED_MULTIVARIATE
    return SCALAR_MSE


# ----- report row (de)serialization for manifest re-rendering ---------------------


def rows_to_jsonable(rows) -> list:
    out = []
    for row in rows:
        out.append({
            "dataset": row.dataset,
            "period": row.period,
            "light": row.light,
            "seq_length": row.seq_length,
            "train_count": row.train_count,
            "test_count": row.test_count,
            "dims": row.dims,
            "metrics": {
                name: {"mae": m.mae, "mse": m.mse, "rmse": m.rmse,
                       "sample_count": m.sample_count}
                for name, m in sorted(row.metrics.items())
            },
        })
    return out


def rows_from_jsonable(payload) -> list:
    rows = []
    for item in payload:
        metrics = {name: MetricSet(**m) for name, m in item["metrics"].items()}
        rows.append(ResultRow(
            dataset=item["dataset"], period=item["period"], light=item["light"],
            train_count=item["train_count"], test_count=item["test_count"],
            dims=item["dims"], metrics=metrics, seq_length=item["seq_length"]))
    return rows

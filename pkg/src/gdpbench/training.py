"""Losses, gradient-descent training, and the k-fold dual-checkpoint
grid-search protocol.

Protocol: every hyperparameter grid point is scored by k-fold
cross-validation (mean of per-fold validation losses, GDP component only
for vector targets). The winning grid point contributes two checkpoints:
the fold model with the lowest own-fold validation loss ("best valid") and
a model retrained on the full training set with the winning
hyperparameters ("final").

Seeds: one base seed; per-(grid point, fold) training seeds are derived by
hashing, so the protocol is deterministic end to end and grid points are
independently seeded.
"""

import hashlib
import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DivergenceError, ValidationError
from .models import (
    LSTMConfig,
    LSTMForecaster,
    MLPConfig,
    MLPRegressor,
    PatchForecaster,
    PatchForecasterConfig,
    RepresentationTransformer,
    RTConfig,
    fit_linear_stacked,
)
from .nn import backward, save_params, load_params

SCALAR_MSE = "scalar_mse"
WEIGHTED_MULTIVARIATE = "weighted_multivariate"

ADAM_BETA1, ADAM_BETA2, ADAM_EPS = 0.9, 0.999, 1e-8


@dataclass(frozen=True)
class LossConfig:
    kind: str = SCALAR_MSE
    w_gdp: float = 1.0

    def __post_init__(self):
        if self.kind not in (SCALAR_MSE, WEIGHTED_MULTIVARIATE):
            raise ConfigError(f"unknown loss kind {self.kind!r}")
        if self.kind == WEIGHTED_MULTIVARIATE and not self.w_gdp > 0:
            raise ConfigError("W_GDP must be > 0")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-2
    batch_size: int = 32
    max_epochs: int = 200
    patience: int | None = None  # early stop on a 10% tail slice when set
    seed: int = 0
    optimizer: str = "adam"

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ConfigError("learning rate must be > 0")
        if self.max_epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch size must be >= 1")
        if self.optimizer not in ("adam", "sgd"):
            raise ConfigError(f"unknown optimizer {self.optimizer!r}")


@dataclass(frozen=True)
class CVConfig:
    k: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.k < 2:
            raise ConfigError("cross-validation needs k >= 2")


def derive_seed(*parts) -> int:
    blob = "/".join(str(p) for p in parts).encode("utf-8")
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "little")


# ----- losses -------------------------------------------------------------------


def _components(z):
    if hasattr(z, "indicators"):  # ZVector
        return [float(v) for v in z.indicators] + [float(z.gdp)]
    return [float(v) for v in np.asarray(z).ravel()]


def weighted_multivariate_loss(pred, target, w_gdp: float) -> float:
    """Sum of squared indicator errors plus W_GDP times the squared GDP
    error, for one sample. GDP is the last component.

    Computed with sequential python arithmetic so results are reproducible
    to the last bit regardless of vector length.
    """
    if not w_gdp > 0:
        raise ValidationError("W_GDP must be > 0")
    p, t = _components(pred), _components(target)
    if len(p) != len(t):
        raise ValidationError(f"length mismatch {len(p)} vs {len(t)}")
    acc = 0.0
    for a, b in zip(p[:-1], t[:-1]):
        d = a - b
        acc += d * d
    d = p[-1] - t[-1]
    return acc + w_gdp * d * d


def batch_weighted_loss(preds, targets, w_gdp: float) -> float:
    """Mean of weighted_multivariate_loss over the sample axis."""
    preds = np.atleast_2d(np.asarray(preds, dtype=np.float64))
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    if preds.shape != targets.shape:
        raise ValidationError(f"shape mismatch {preds.shape} vs {targets.shape}")
    sq = (preds - targets) ** 2
    w = np.ones(preds.shape[1])
    w[-1] = w_gdp
    return float(np.mean(sq @ w))


def validation_loss(preds, targets, mode: str) -> float:
    """Plain MSE in scalar mode; GDP-component-only MSE in multi mode."""
    preds = np.asarray(preds, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if preds.size == 0:
        raise ValidationError("validation over an empty sample set")
    if preds.shape != targets.shape:
        raise ValidationError(f"shape mismatch {preds.shape} vs {targets.shape}")
    if mode == "multi_indicator":
        p = preds.reshape(preds.shape[0], -1)[:, -1]
        t = targets.reshape(targets.shape[0], -1)[:, -1]
    elif mode == "scalar":
        p, t = preds.ravel(), targets.ravel()
    else:
        raise ValidationError(f"unknown validation mode {mode!r}")
    return float(np.mean((p - t) ** 2))


def _validation_mode(loss_cfg: LossConfig, out_dim: int) -> str:
    if loss_cfg.kind == WEIGHTED_MULTIVARIATE and out_dim > 1:
        return "multi_indicator"
    return "scalar"


def attach_loss(g, pred, batch_size, out_dim, loss_cfg: LossConfig):
    """Append the batch loss subgraph; targets arrive via input "y"."""
    y = g.input("y", (batch_size, out_dim))
    d = g.sub(pred, y)
    sq = g.mul(d, d)
    if loss_cfg.kind == WEIGHTED_MULTIVARIATE:
        if out_dim > 1:
            w = np.ones(out_dim)
            w[-1] = loss_cfg.w_gdp
            sq = g.broadcast_mul(sq, g.constant(w))
            return g.scale(g.sum(sq), 1.0 / batch_size, name="loss")
        return g.scale(g.sum(sq), loss_cfg.w_gdp / batch_size, name="loss")
    return g.scale(g.sum(sq), 1.0 / (batch_size * out_dim), name="loss")


# ----- k-fold assignment ----------------------------------------------------------


def kfold_split(sample_count: int, cv: CVConfig) -> list:
    """Disjoint folds covering 0..n-1, sizes within 1 of each other:
    seeded shuffle, then round-robin assignment."""
    if sample_count < cv.k:
        raise ValidationError(f"{sample_count} samples cannot fill {cv.k} folds")
    perm = np.random.default_rng(cv.seed).permutation(sample_count)
    return [np.sort(perm[j::cv.k]) for j in range(cv.k)]


# ----- model families -------------------------------------------------------------


_FAMILIES = {
    "mlp": (MLPConfig, MLPRegressor),
    "lstm": (LSTMConfig, LSTMForecaster),
    "patch": (PatchForecasterConfig, PatchForecaster),
    "rt": (RTConfig, RepresentationTransformer),
}

FAMILY_NAMES = ("linear",) + tuple(_FAMILIES)


def build_model(family: str, config: dict):
    if family not in _FAMILIES:
        raise ConfigError(f"unknown model family {family!r}")
    config_cls, model_cls = _FAMILIES[family]
    try:
        cfg = config_cls(**config)
    except TypeError as exc:
        raise ConfigError(f"bad {family} config {config}: {exc}") from exc
    return model_cls(cfg)


def _take(x, idx):
    if isinstance(x, tuple):
        return tuple(np.asarray(part)[idx] for part in x)
    return np.asarray(x)[idx]


def _flatten_for_linear(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 3:  # windows: lag structure is the flattened window
        return x.reshape(x.shape[0], -1)
    return x


# ----- checkpoints -----------------------------------------------------------------


@dataclass
class Checkpoint:
    family: str
    config: dict
    params: dict
    loss: LossConfig
    seed: int
    epochs_run: int
    train_sample_count: int
    meta: dict = field(default_factory=dict)

    def predict(self, x) -> np.ndarray:
        if self.family == "linear":
            xf = _flatten_for_linear(x)
            return xf @ self.params["weights"] + self.params["bias"]
        model = build_model(self.family, self.config)
        return model.predict(self.params, x)


def save_checkpoint(prefix, ckpt: Checkpoint, extra=None) -> dict:
    """Write <prefix>.nnp (parameter store) and <prefix>.json (sidecar)."""
    save_params(f"{prefix}.nnp", ckpt.params)
    sidecar = {
        "family": ckpt.family,
        "config": ckpt.config,
        "loss": {"kind": ckpt.loss.kind, "w_gdp": ckpt.loss.w_gdp},
        "seed": ckpt.seed,
        "epochs_run": ckpt.epochs_run,
        "train_sample_count": ckpt.train_sample_count,
        "meta": ckpt.meta,
    }
    if extra:
        sidecar.update(extra)
    with open(f"{prefix}.json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return sidecar


def load_checkpoint(prefix) -> Checkpoint:
    with open(f"{prefix}.json", encoding="utf-8") as fh:
        sidecar = json.load(fh)
    return Checkpoint(
        family=sidecar["family"],
        config=sidecar["config"],
        params=load_params(f"{prefix}.nnp"),
        loss=LossConfig(**sidecar["loss"]),
        seed=sidecar["seed"],
        epochs_run=sidecar["epochs_run"],
        train_sample_count=sidecar["train_sample_count"],
        meta=sidecar.get("meta", {}),
    )


# ----- training -------------------------------------------------------------------


def _as_target_matrix(y, out_dim):
    y = np.asarray(y, dtype=np.float64)
    if y.ndim == 1:
        y = y[:, None]
    if y.shape[1] != out_dim:
        raise ValidationError(f"target dim {y.shape[1]} != model output {out_dim}")
    return y


def _adam_step(params, grads, state, lr, step):
    out = {}
    for name, p in params.items():
        g = grads[name]
        m, v = state.get(name, (np.zeros_like(p), np.zeros_like(p)))
        m = ADAM_BETA1 * m + (1 - ADAM_BETA1) * g
        v = ADAM_BETA2 * v + (1 - ADAM_BETA2) * g * g
        state[name] = (m, v)
        mhat = m / (1 - ADAM_BETA1 ** step)
        vhat = v / (1 - ADAM_BETA2 ** step)
        out[name] = p - lr * mhat / (np.sqrt(vhat) + ADAM_EPS)
    return out


def _sgd_step(params, grads, lr):
    return {name: p - lr * grads[name] for name, p in params.items()}


def _train_linear(config, data, loss_cfg, tc):
    x, y = data
    xf = _flatten_for_linear(x)
    ridge = float(config.get("ridge_eps", 0.0))
    unknown = set(config) - {"ridge_eps"}
    if unknown:
        raise ConfigError(f"unknown linear config keys {sorted(unknown)}")
    y = np.asarray(y, dtype=np.float64)
    y2 = y[:, None] if y.ndim == 1 else y
    stacked = fit_linear_stacked(xf, y2, ridge_eps=ridge)
    weights = np.column_stack([m.weights for m in stacked.models])
    bias = np.array([m.bias for m in stacked.models], dtype=np.float64)
    ckpt = Checkpoint(
        family="linear", config={"ridge_eps": ridge},
        params={"weights": weights, "bias": bias},
        loss=loss_cfg, seed=tc.seed, epochs_run=0,
        train_sample_count=xf.shape[0],
        meta={"used_fallback": any(m.used_fallback for m in stacked.models),
              "effective_ridge": max(m.effective_ridge for m in stacked.models)})
    return ckpt, {"train": [], "valid": []}


def train_model(family: str, config: dict, data, loss_cfg: LossConfig,
                tc: TrainConfig):
    """Fit one model; returns (Checkpoint, loss curves).

    The linear family delegates to the closed-form solver. Neural families
    run seeded minibatch gradient descent; with ``patience`` set, a 10%
    tail slice of the provided samples is held out and training stops when
    its loss fails to improve for ``patience`` consecutive epochs (the
    best-slice parameters are restored). A non-finite loss raises
    DivergenceError carrying the last finite epoch.
    """
    x, y = data
    if family == "linear":
        return _train_linear(config, data, loss_cfg, tc)
    model = build_model(family, config)
    n = model.n_samples(x)
    if n < 1:
        raise ValidationError("training data is empty")
    targets = _as_target_matrix(y, model.output_dim)

    if tc.patience is not None and n >= 2:
        n_valid = max(1, n // 10)
        train_idx = np.arange(n - n_valid)
        valid_idx = np.arange(n - n_valid, n)
    else:
        train_idx = np.arange(n)
        valid_idx = None

    params = model.init_params(derive_seed(tc.seed, "init"))
    rng = np.random.default_rng(derive_seed(tc.seed, "shuffle"))
    opt_state = {}
    graphs = {}
    curve_train, curve_valid = [], []
    best_params, best_loss, stale = None, math.inf, 0
    vmode = _validation_mode(loss_cfg, model.output_dim)
    last_finite = -1
    step = 0
    epochs_run = 0
    for epoch in range(tc.max_epochs):
        order = rng.permutation(train_idx)
        loss_sum, seen = 0.0, 0
        for start in range(0, len(order), tc.batch_size):
            bidx = order[start:start + tc.batch_size]
            bs = len(bidx)
            if bs not in graphs:
                g, pred = model.build(params, bs, _take(x, bidx))
                graphs[bs] = (g, attach_loss(g, pred, bs, model.output_dim, loss_cfg))
            g, loss_node = graphs[bs]
            for name, value in params.items():
                g.set_parameter(name, value)
            bindings = model.bindings(x, bidx)
            bindings["y"] = targets[bidx]
            with np.errstate(over="ignore", invalid="ignore"):
                loss_val, grads = backward(g, loss_node, bindings)
            if not math.isfinite(loss_val):
                raise DivergenceError(
                    f"{family} loss became non-finite at epoch {epoch}",
                    last_finite_epoch=last_finite)
            step += 1
            with np.errstate(over="ignore", invalid="ignore"):
                if tc.optimizer == "adam":
                    params = _adam_step(params, grads, opt_state, tc.learning_rate, step)
                else:
                    params = _sgd_step(params, grads, tc.learning_rate)
            loss_sum += loss_val * bs
            seen += bs
        train_loss = loss_sum / seen
        last_finite = epoch
        epochs_run = epoch + 1
        curve_train.append(train_loss)
        if valid_idx is not None:
            preds = model.predict(params, _take(x, valid_idx))
            vloss = validation_loss(preds, targets[valid_idx], vmode)
            curve_valid.append(vloss)
            if vloss < best_loss:
                best_loss, best_params, stale = vloss, dict(params), 0
            else:
                stale += 1
                if stale > tc.patience:
                    break
    if valid_idx is not None and best_params is not None:
        params = best_params
    ckpt = Checkpoint(family=family, config=dict(config), params=params,
                      loss=loss_cfg, seed=tc.seed, epochs_run=epochs_run,
                      train_sample_count=n)
    return ckpt, {"train": curve_train, "valid": curve_valid}


# ----- grid search -----------------------------------------------------------------


TRAIN_KEYS = ("learning_rate", "batch_size", "max_epochs", "patience")
LOSS_KEYS = ("w_gdp",)


def expand_grid(space: dict) -> list:
    """Cartesian product over the grid axes, in key-insertion order."""
    if not space:
        raise ConfigError("empty hyperparameter grid")
    keys = list(space)
    return [dict(zip(keys, combo))
            for combo in itertools.product(*(space[k] for k in keys))]


def _split_grid_point(point):
    model_part, train_part, loss_part = {}, {}, {}
    for key, value in point.items():
        if key in TRAIN_KEYS:
            train_part[key] = value
        elif key in LOSS_KEYS:
            loss_part[key] = value
        else:
            model_part[key] = value
    return model_part, train_part, loss_part


@dataclass
class CVRun:
    """Everything the dual-checkpoint protocol produced."""

    family: str
    grid: list
    folds: list  # k index arrays over the training samples
    fold_losses: list  # per grid point: list of k losses, or None if diverged
    mean_losses: list  # per grid point: mean fold loss, or None
    winner: int
    best_fold: int
    best_valid_checkpoint: Checkpoint
    final_checkpoint: Checkpoint
    cv: CVConfig
    base_seed: int
    train_sample_count: int


def grid_search(family: str, base_config: dict, space: dict, data,
                loss_cfg: LossConfig, train_cfg: TrainConfig, cv: CVConfig,
                jobs: int = 1) -> CVRun:
    """Score every grid point with k-fold cross-validation and produce the
    dual checkpoints.

    Winner: minimum mean fold validation loss (ties: earliest grid point).
    Best-valid checkpoint: the winner's fold model with the lowest own-fold
    loss (ties: lowest fold index). Final checkpoint: retrained on 100% of
    the training samples with the winning hyperparameters.
    """
    x, y = data
    points = expand_grid(space)
    n = len(np.asarray(y))
    folds = kfold_split(n, cv)
    all_idx = np.arange(n)

    def run_fold(task):
        gi, fj = task
        model_part, train_part, loss_part = _split_grid_point(points[gi])
        config = {**base_config, **model_part}
        tc = replace(train_cfg, **train_part, seed=derive_seed(
            train_cfg.seed, "grid", gi, "fold", fj))
        lc = replace(loss_cfg, **loss_part)
        train_idx = np.setdiff1d(all_idx, folds[fj])
        try:
            ckpt, _curves = train_model(
                family, config, (_take(x, train_idx), np.asarray(y)[train_idx]),
                lc, tc)
        except DivergenceError:
            return None
        preds = ckpt.predict(_take(x, folds[fj]))
        out_dim = preds.shape[1] if preds.ndim > 1 else 1
        vloss = validation_loss(
            preds, _as_target_matrix(np.asarray(y)[folds[fj]], out_dim),
            _validation_mode(lc, out_dim))
        return ckpt, vloss

    tasks = [(gi, fj) for gi in range(len(points)) for fj in range(cv.k)]
    if jobs <= 1:
        results = [run_fold(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_fold, tasks))

    fold_losses, mean_losses, checkpoints = [], [], []
    for gi in range(len(points)):
        row = results[gi * cv.k:(gi + 1) * cv.k]
        if any(r is None for r in row):
            fold_losses.append(None)
            mean_losses.append(None)
            checkpoints.append(None)
            continue
        losses = [r[1] for r in row]
        fold_losses.append(losses)
        mean_losses.append(float(np.mean(losses)))
        checkpoints.append([r[0] for r in row])
    if all(m is None for m in mean_losses):
        raise DivergenceError("every grid point diverged", last_finite_epoch=-1)

    winner = min((gi for gi in range(len(points)) if mean_losses[gi] is not None),
                 key=lambda gi: mean_losses[gi])
    best_fold = int(np.argmin(fold_losses[winner]))
    best_valid = checkpoints[winner][best_fold]

    model_part, train_part, loss_part = _split_grid_point(points[winner])
    final_tc = replace(train_cfg, **train_part,
                       seed=derive_seed(train_cfg.seed, "grid", winner, "final"))
    final_lc = replace(loss_cfg, **loss_part)
    final_ckpt, _ = train_model(family, {**base_config, **model_part},
                                (x, np.asarray(y)), final_lc, final_tc)

    return CVRun(family=family, grid=points, folds=folds,
                 fold_losses=fold_losses, mean_losses=mean_losses,
                 winner=int(winner), best_fold=best_fold,
                 best_valid_checkpoint=best_valid, final_checkpoint=final_ckpt,
                 cv=cv, base_seed=train_cfg.seed, train_sample_count=n)


def save_cvrun(out_dir, run: CVRun, prefix: str, extra=None) -> str:
    """Persist the manifest plus both checkpoints; returns the manifest path."""
    import os

    best_prefix = os.path.join(out_dir, f"{prefix}_best")
    final_prefix = os.path.join(out_dir, f"{prefix}_final")
    save_checkpoint(best_prefix, run.best_valid_checkpoint, extra)
    save_checkpoint(final_prefix, run.final_checkpoint, extra)
    manifest = {
        "family": run.family,
        "grid": run.grid,
        "cv": {"k": run.cv.k, "seed": run.cv.seed},
        "base_seed": run.base_seed,
        "train_sample_count": run.train_sample_count,
        "folds": [fold.tolist() for fold in run.folds],
        "fold_losses": run.fold_losses,
        "mean_losses": run.mean_losses,
        "winner": run.winner,
        "winning_grid_point": run.grid[run.winner],
        "best_fold": run.best_fold,
        "best_fold_loss": run.fold_losses[run.winner][run.best_fold],
        "best_valid_checkpoint": f"{prefix}_best",
        "final_checkpoint": f"{prefix}_final",
        "final_train_sample_count": run.final_checkpoint.train_sample_count,
    }
    if extra:
        manifest.update(extra)
    path = os.path.join(out_dir, f"{prefix}_cvrun.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return path

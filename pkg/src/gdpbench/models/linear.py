"""Closed-form linear regression via normal equations with ridge fallback."""

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError

FALLBACK_RIDGE = 1e-8


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray  # (d,)
    bias: float
    ridge_eps: float  # as requested
    effective_ridge: float  # after any singularity fallback
    used_fallback: bool = False


def _solve_normal_equations(a, y, lam):
    g = a.T @ a
    if lam > 0.0:
        g = g + lam * np.eye(a.shape[1])
    rhs = a.T @ y
    coef = np.linalg.solve(g, rhs)
    residual = np.max(np.abs(g @ coef - rhs))
    scale = max(1.0, np.max(np.abs(rhs)),
                np.max(np.abs(g)) * max(1.0, np.max(np.abs(coef))))
    ok = bool(np.all(np.isfinite(coef))) and residual <= 1e-6 * scale
    return coef, ok


def fit_linear(x, y, ridge_eps: float = 0.0) -> LinearModel:
    """Solve (A'A + eps I) w = A'y on the ones-augmented design matrix.

    With ridge_eps=0 the exact normal equations are attempted first; if the
    system is numerically singular the solver falls back to eps=1e-8 and
    records that on the returned model.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape[0] != y.shape[0] or x.shape[0] < 1:
        raise ValidationError(f"bad sample shapes {x.shape} vs {y.shape}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValidationError("non-finite values in regression inputs")
    if ridge_eps < 0:
        raise ValidationError("ridge_eps must be >= 0")
    a = np.hstack([x, np.ones((x.shape[0], 1))])
    used_fallback = False
    effective = ridge_eps
    try:
        coef, ok = _solve_normal_equations(a, y, ridge_eps)
    except np.linalg.LinAlgError:
        ok = False
        coef = None
    if not ok:
        effective = max(ridge_eps, FALLBACK_RIDGE)
        used_fallback = True
        coef, ok = _solve_normal_equations(a, y, effective)
        if not ok:
            raise ValidationError("normal equations unsolvable even with ridge")
    return LinearModel(weights=coef[:-1], bias=float(coef[-1]),
                       ridge_eps=ridge_eps, effective_ridge=effective,
                       used_fallback=used_fallback)


def predict_linear(model: LinearModel, x) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != model.weights.shape[0]:
        raise ValidationError(
            f"feature dim {x.shape[1]} != model dim {model.weights.shape[0]}")
    return x @ model.weights + model.bias


@dataclass(frozen=True)
class LinearVectorModel:
    """Stacked per-output-column linear models for vector autoregression."""

    models: tuple

    @property
    def output_dim(self):
        return len(self.models)

    def predict(self, x) -> np.ndarray:
        return np.column_stack([predict_linear(m, x) for m in self.models])


def fit_linear_stacked(x, targets, ridge_eps: float = 0.0) -> LinearVectorModel:
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    return LinearVectorModel(models=tuple(
        fit_linear(x, targets[:, j], ridge_eps) for j in range(targets.shape[1])))

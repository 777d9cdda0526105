from .linear import LinearModel, LinearVectorModel, fit_linear, fit_linear_stacked, predict_linear
from .mlp import MLPConfig, MLPRegressor, mlp_forward
from .lstm import LSTMConfig, LSTMForecaster, lstm_forward
from .patch import PatchForecasterConfig, PatchForecaster, patch_forecast
from .rt import RTConfig, RTToken, RepresentationTransformer, rt_forward

__all__ = [
    "LinearModel",
    "LinearVectorModel",
    "fit_linear",
    "fit_linear_stacked",
    "predict_linear",
    "MLPConfig",
    "MLPRegressor",
    "mlp_forward",
    "LSTMConfig",
    "LSTMForecaster",
    "lstm_forward",
    "PatchForecasterConfig",
    "PatchForecaster",
    "patch_forecast",
    "RTConfig",
    "RTToken",
    "RepresentationTransformer",
    "rt_forward",
]

"""Lagged-input neural network and ARIMAX forecasting."""

from ._core import (  # noqa: F401
    ValidationError,
    bic,
    count_parameters,
    fit_arima,
    fit_nn,
    forecast,
    hidden_layers,
    load_csv,
    parse_order,
    r_squared,
    run_cli,
    search,
    simulate,
    sse,
)

__version__ = "0.1.0"

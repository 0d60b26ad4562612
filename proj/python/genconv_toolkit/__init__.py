from ._genconv import (
    ConfigError,
    DataError,
    Model,
    NumericError,
    ShapeError,
    brute_knn,
    gen_toy_cloud,
    knn,
    normalize,
)

__all__ = [
    "ConfigError",
    "DataError",
    "Model",
    "NumericError",
    "ShapeError",
    "brute_knn",
    "gen_toy_cloud",
    "knn",
    "normalize",
]

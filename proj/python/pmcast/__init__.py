"""Python bindings for the pmcast core: CEEMDAN decomposition, metrics,
the Diebold-Mariano test, the synthetic corpus and full experiment runs."""

from ._core import (
    DivergenceError,
    OrderingError,
    ParameterError,
    SchemaError,
    ShapeError,
    ceemdan,
    compute_metrics,
    count_zero_crossings,
    default_config,
    dm_test,
    emd,
    find_extrema,
    improvement_table,
    load_frame,
    run,
    split_at_dates,
    split_chronological,
    synth_generate,
)

__all__ = [
    "DivergenceError",
    "OrderingError",
    "ParameterError",
    "SchemaError",
    "ShapeError",
    "ceemdan",
    "compute_metrics",
    "count_zero_crossings",
    "default_config",
    "dm_test",
    "emd",
    "find_extrema",
    "improvement_table",
    "load_frame",
    "reconstruct",
    "run",
    "split_at_dates",
    "split_chronological",
    "synth_generate",
]


def reconstruct(result):
    """Sum of the IMFs and the residue of an emd/ceemdan result."""
    return result["imfs"].sum(axis=0) + result["residue"]

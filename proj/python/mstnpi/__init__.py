"""Python bindings for the mstnpi engine and reference oracles."""

from ._core import Engine, ParameterError, __version__, normalize_config, oracle, run

__all__ = ["Engine", "ParameterError", "__version__", "normalize_config", "oracle", "run"]

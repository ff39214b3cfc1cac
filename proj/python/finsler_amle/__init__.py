"""AMLE solver and verifier on Finsler stencil graphs."""

from ._core import (
    ConfigError,
    Error,
    InputError,
    Problem,
    aronsson,
    preset,
    presets,
    set_threads,
)

__all__ = [
    "ConfigError",
    "Error",
    "InputError",
    "Problem",
    "aronsson",
    "preset",
    "presets",
    "set_threads",
]

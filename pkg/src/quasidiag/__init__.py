"""Quasi-diagonality of metaplectic operators from their symplectic projections."""

from .errors import *  # noqa: F401,F403
from .symplectic import (
    Chirp,
    Dilation,
    Fourier,
    GeneratorWord,
    SymplecticMatrix,
    standard_form,
    validate_symplectic,
    word,
    word_product,
)
from .kernels import localization_manifold, smoothed_form, verdict

__version__ = "0.1.0"

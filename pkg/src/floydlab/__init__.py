"""Doubles of free groups over malnormal subgroups: construction, certificates, Floyd experiments."""

from .words import (ABXY, F2, AFFINE, TOWER, Alphabet, AlphabetError, CyclicWord,
                    DegenerateInputError, GrowthSchedule, MagnitudeError, Word, build_U,
                    concat, cyclic_reduce, format_word, gromov_product, invert,
                    is_proper_power, parse_word, reduce)

__version__ = "0.1.0"

__all__ = [
    "ABXY", "F2", "AFFINE", "TOWER", "Alphabet", "AlphabetError", "CyclicWord",
    "DegenerateInputError", "GrowthSchedule", "MagnitudeError", "Word", "build_U",
    "concat", "cyclic_reduce", "format_word", "gromov_product", "invert",
    "is_proper_power", "parse_word", "reduce",
]

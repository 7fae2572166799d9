"""Finite back-and-forth games, independent families and rigidity search."""

from .core import PartialMap, Structure, StructureError, Vocabulary, decode, encode, make_structure, reduct, restrict
from .families import P0, GoodSequence, TruncationParams, build_good_sequence, verify_good_sequence

__all__ = [
    "P0",
    "GoodSequence",
    "PartialMap",
    "Structure",
    "StructureError",
    "TruncationParams",
    "Vocabulary",
    "build_good_sequence",
    "decode",
    "encode",
    "make_structure",
    "reduct",
    "restrict",
    "verify_good_sequence",
]

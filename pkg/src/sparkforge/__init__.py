"""Exact spark complexes, Čech–Deligne products and Chern–Weil transgression."""

from .cech_models import MODEL_FIXTURES, TRIPLE_FIXTURES, CechModel
from .complexes import CochainComplex, ComplexMorphism
from .exact_linalg import QQi, QZGroup, QZModule, SparseMatrix
from .spark_core import SparkComplexTriple, SparkMorphism, grid_3x3

__version__ = "0.1.0"

__all__ = ["CechModel", "CochainComplex", "ComplexMorphism", "MODEL_FIXTURES", "QQi", "QZGroup",
           "QZModule", "SparkComplexTriple", "SparkMorphism", "SparseMatrix", "TRIPLE_FIXTURES", "grid_3x3"]

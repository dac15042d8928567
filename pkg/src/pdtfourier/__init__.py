"""Parity decision trees, k-cleanup, exact Fourier spectra and concentration experiments."""

from .cleanup import CleanTree, cleanup_tree, verify_clean
from .fourier import Spectrum, bound_report, spectrum_via_leaves, wht
from .gf2 import AffineCoset, F2Subspace
from .noisy import NoisyDecisionTree, exact_spectrum
from .pdt import ParityDecisionTree, evaluate, random_pdt, tree_from_nested, validate

__all__ = [
    "AffineCoset", "CleanTree", "F2Subspace", "NoisyDecisionTree", "ParityDecisionTree",
    "Spectrum", "bound_report", "cleanup_tree", "evaluate", "exact_spectrum", "random_pdt",
    "spectrum_via_leaves", "tree_from_nested", "validate", "verify_clean", "wht",
]

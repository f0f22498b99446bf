"""Hyperspherical harmonics, rotations of the Jacobi frame and classical motion of three equal masses."""
from ._backend import BACKEND
from .basis import (InvalidLabelError, SymLabel, TreeLabel, degeneracy, degeneracy_total,
                    enumerate_tree_basis, tree_function)
from .kinematics import FrameOrientation, ShapeState, parametrize, reconstruct
from .polyops import Polynomial6, apply, inner_product
from .transform import diagonalize_block, omega_block, rotation_coefficient, sym_basis

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "FrameOrientation", "InvalidLabelError", "Polynomial6", "ShapeState",
    "SymLabel", "TreeLabel", "apply", "degeneracy", "degeneracy_total", "diagonalize_block",
    "enumerate_tree_basis", "inner_product", "omega_block", "parametrize", "reconstruct",
    "rotation_coefficient", "sym_basis", "tree_function", "__version__",
]

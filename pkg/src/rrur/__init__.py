"""Kinematics of the 3-RRUR neck-brace parallel robot and learned forward-kinematics estimators."""

from .errors import KinematicsError
from .geometry import Pose, RobotParams, derive_translation, load_params
from .ik import solve_ik

__all__ = ["KinematicsError", "Pose", "RobotParams", "derive_translation", "load_params", "solve_ik"]
__version__ = "0.1.0"

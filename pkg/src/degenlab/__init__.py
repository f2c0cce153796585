"""Numerical laboratory for a degenerate Einstein-type diffusion model.

Modules: :mod:`params` (constants), :mod:`field` (grids and annuli),
:mod:`solver` (explicit scheme), :mod:`walkers` (particles), :mod:`degiorgi`
(localization certificate), :mod:`oracle` (closed-form references) and
:mod:`cli`.
"""
from .field import DeGiorgiGeometry, ScalarField, box_field, sample
from .params import ModelParams, ReactionSpec, derive_constants, validate_params
from .solver import SolverConfig, Trajectory, solve

__version__ = "0.1.0"

# siclab.core package
"""Core functionality for the siclab package."""

from siclab.core.fiducials import FiducialCatalog, FiducialRecord, SearchConfig, builtin_fiducial, search_fiducial
from siclab.core.galois import (Mat2Residue, SearchGuardError, build_M, classify_type, m_orbits,
                                orbit_divisor_correspondence, overlap_symmetry_group, zauner_matrix)
from siclab.core.heisenberg import Dimension, DisplacementIndex, VerificationError, displacement
from siclab.core.momentmap import admissible_geometry, admissible_parametrize, moment_map, torus_eigenbasis
from siclab.core.overlap import OverlapTable, cyclic_subgroup, is_sic_fiducial, overlap_map
from siclab.core.quadfield import FieldData, QuadInt, field_data, fundamental_unit, prime_splitting
from siclab.core.utils import ensure_dir_exists, load_config, load_data

__all__ = [
    'Dimension',
    'DisplacementIndex',
    'VerificationError',
    'displacement',
    'OverlapTable',
    'overlap_map',
    'is_sic_fiducial',
    'cyclic_subgroup',
    'torus_eigenbasis',
    'moment_map',
    'admissible_geometry',
    'admissible_parametrize',
    'FiducialRecord',
    'FiducialCatalog',
    'SearchConfig',
    'builtin_fiducial',
    'search_fiducial',
    'FieldData',
    'QuadInt',
    'field_data',
    'fundamental_unit',
    'prime_splitting',
    'Mat2Residue',
    'SearchGuardError',
    'zauner_matrix',
    'overlap_symmetry_group',
    'build_M',
    'm_orbits',
    'classify_type',
    'orbit_divisor_correspondence',
    'load_config',
    'load_data',
    'ensure_dir_exists',
]

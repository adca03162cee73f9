"""Wave BSDF toolkit: Wigner tables of microstructures, a signed-radiance
path tracer that uses them, wave-optics reference oracles and thin-lens PSFs."""
from .errors import (ArgumentError, DataError, InternalConsistencyError, PrecisionError,
                     SamplingError, SceneError, ScopeError, WbsdfError)
from .field import ComplexGrid, WignerTable, grating_wdf_closed_form, marginals, wdf_1d, wdf_2d_separable
from .microstructure import GridSpec, Microstructure, realize
from .psf import LensSpec, apply_psf, build_stack, compute_psf
from .render import Image, render
from .scene import Scene, load_scene
from .wbsdf import WBSDF, StatisticalSurfaceSpec, stam_far_field, statistical_wbsdf

__version__ = "0.1.0"

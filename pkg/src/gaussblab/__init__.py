"""Gaussian measures of centrally symmetric convex bodies.

Measures, restricted moments and perimeters (:mod:`gaussblab.gauss`),
B-inequality deficits and log-measure Hessians (:mod:`gaussblab.bineq`),
stability thresholds, audits and calibrated constants
(:mod:`gaussblab.stability`) and the maximal Gaussian measure position
(:mod:`gaussblab.mgm`).
"""
from .bodies import (Ball, Box, DiagScaled, Ellipsoid, HPolytope, LinearImage, Product, Strip,
                     SymmetricBody, full_space, in_radius, linear_image, scale_diag)
from .errors import (DimensionMismatchError, DomainError, GaussblabError, NoClosedFormError,
                     SchemaError, SingularMatrixError, StallError, UnresolvableMassError,
                     UnsupportedEngineError)
from .functions import FunctionSpec
from .schema import body_from_dict, load_body

__version__ = "0.1.0"

__all__ = ["Ball", "Box", "DiagScaled", "Ellipsoid", "HPolytope", "LinearImage", "Product",
           "Strip", "SymmetricBody", "full_space", "in_radius", "linear_image", "scale_diag",
           "FunctionSpec", "body_from_dict", "load_body", "GaussblabError", "DimensionMismatchError",
           "DomainError", "NoClosedFormError", "SchemaError", "SingularMatrixError", "StallError",
           "UnresolvableMassError", "UnsupportedEngineError", "__version__"]

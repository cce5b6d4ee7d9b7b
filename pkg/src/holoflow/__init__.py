"""holoflow: exterior-calculus verification toolkit for higher-dimensional
instantons, Chern-Simons gradient flow, and conformal energy estimates on
cylinders and cones over nearly Kähler and nearly parallel G2 geometries.
"""

from ._kernels import active_implementation
from .exterior import (
    Form,
    MetricFrame,
    conformal_hodge,
    cylinder_lift,
    cylinder_split,
    dt_form,
    hodge,
    inner,
    interior,
    norm2,
    random_form,
    wedge,
)
from .structures import (
    CylinderForms,
    GStructureCatalog,
    algebraic_suite,
    build_cone,
    build_cylinder,
    catalog,
    verify_structure,
)

__version__ = "0.1.0"

__all__ = [
    "Form",
    "MetricFrame",
    "CylinderForms",
    "GStructureCatalog",
    "active_implementation",
    "algebraic_suite",
    "build_cone",
    "build_cylinder",
    "catalog",
    "conformal_hodge",
    "cylinder_lift",
    "cylinder_split",
    "dt_form",
    "hodge",
    "inner",
    "interior",
    "norm2",
    "random_form",
    "verify_structure",
    "wedge",
    "__version__",
]

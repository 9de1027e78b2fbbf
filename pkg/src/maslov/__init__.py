"""Maslov indices and mean-curvature data for Lagrangian submanifolds.

The package computes, for parametric Lagrangian immersions into flat
Kaehler ambients (C^n or flat tori), the integer index of closed loops by
two independent routes:

* a topological engine that unwraps the winding of the squared
  determinant of the tangent frames along the loop, and
* an integral-geometric engine that integrates the mean-curvature
  contraction (1/pi) * omega(H, .) along the same loop.

Agreement of the two engines, pointwise and after integration, is the
package's central cross-check; `maslov.engines.run_report` packages one
(shape, loop) run with all residual diagnostics. Supporting modules cover
the flat Kaehler linear algebra (`ambient`), Lagrangian-Grassmannian
frames, plane paths and parallel transport (`grassmann`), parametric
immersions with analytic or finite-difference jets (`immersion`), the
shape catalog and text specs (`catalog`), a small expression language
(`expressions`), compatible almost-complex structures and the
closure-defect explorer (`engines`), and a batch CLI (`cli`).
"""

from .ambient import AmbientSpace
from .catalog import (
    build_loop,
    build_shape,
    circle,
    expression_immersion,
    expression_twin,
    gradient_graph,
    line,
    plane,
    product_torus,
    su_plane,
)
from .engines import (
    CompatibleStructure,
    MaslovReport,
    closure_defect,
    compatible_from_metric,
    index_integral,
    index_winding,
    maslov_form_value,
    metric_sweep,
    period_vector,
    run_report,
    theorem_residual,
)
from .grassmann import (
    LagrangianFrame,
    PlanePath,
    det_squared,
    frame_to_unitary,
    maslov_map,
    parallel_transport_plane,
    tangent_form,
)
from .immersion import (
    DomainBox,
    LoopPath,
    ParametricImmersion,
    check_lagrangian,
    full_loop,
    generator_loop,
    induced_metric,
    is_special,
    lagrangian_angle,
    mean_curvature,
    second_fundamental,
    tangent_frame,
)

__version__ = "0.1.0"

__all__ = [
    "AmbientSpace",
    "LagrangianFrame",
    "PlanePath",
    "DomainBox",
    "LoopPath",
    "ParametricImmersion",
    "MaslovReport",
    "CompatibleStructure",
    "__version__",
]

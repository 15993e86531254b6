"""Desk-scale laboratory for piecewise constant-curvature surfaces."""

from .errors import (KappasurfError, ChartError, InfeasibleParameters,
                     ValidationError, NonConvergence, VertexObstruction,
                     CurveCollapse)
from .model import ModelPoint, geom, solve_sss, solve_sas, solve_asa
from .surfcomplex import (Face, Gluing, SurfaceComplex, face_from_embedded,
                          validate, gauss_bonnet_audit,
                          euler_and_orientability, scale_metric)
from .curves import CurveSegment, SurfaceCurve, curve_hausdorff
from .surgery import subdivide_edges, cut_along, glue_boundary
from .engine import (trace, shorten, close_up_check, shortest_noncontractible,
                     enumerate_simple_closed, detour_bound,
                     almost_geodesic_check, chord_arc_profile, stability_probe)
from .constructions import (build_quad, build_cylinder_C, build_mobius_M,
                            build_digon_surface_S, build_flat_space,
                            build_sphere_octants, build_sphere_lunes,
                            build_projective_sphere, build_crosscap_strip,
                            build_closed_hyperbolic, build_cone_disk,
                            boundary_circle_length,
                            graft_cylinders)
from .sampling import FiniteMetricSample, intrinsic_sample
from .compare import (CorrespondenceSample, hausdorff, distortion, diameter,
                      gh_lower_bound, natural_correspondence,
                      convergence_report)
from .perturb import (trig_expansion_report, trig_ladder, order_estimate,
                      orders_pass, ldlc_perturb, lad_add_boundary_angles)
from .io import parse_spec, serialize_spec
from .svg import render_svg

__version__ = "0.1.0"

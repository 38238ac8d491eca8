"""Discrete Hodge and de Rham laboratory on boundary-labeled triangulations."""

from .complex import (BoundaryLabeling, SimplicialComplex, boundary_components, build_complex,
                      euler_characteristic, label_boundary, labeling_from_facets,
                      manifold_boundary, rational_betti, relative_coboundary)
from .curvature import (BochnerVerdict, CurvatureSample, bochner_screen, boundary_tensor,
                        s_p_nonpositive, weitzenboeck_flat_residual)
from .derham import AnalyticForm, derham_map, harmonic_pairing, named_form, stokes_residual
from .doubling import QuadrupleComplex, double_complex, eigen_betti, minusplus_betti
from .errors import (ComplexError, DegenerateGeometryError, HodgeLabError, LabelError,
                     MeshParseError, NonManifoldError, RankToleranceWarning, VerificationError)
from .hodge import HodgeComplex, metric_change_projection, perturb_metric
from .meshio import Mesh, format_mesh, parse_mesh, read_mesh, write_mesh
from .metric import CochainMetric, Geometry, make_metric, mesh_quality, whitney_metric

__version__ = "0.1.0"

"""Hybridisable discontinuous Galerkin solver for steady compressible flow in 2D."""

from .errors import HDGError, MaxIterations, NonPhysicalState
from .physics import GasModel, conservative
from .riemann import RiemannScheme, parse_scheme, stabilization_tau, trace_flux
from .basis import local_dimension, reference_element
from .mesh import Mesh, read_mesh, square_level, unit_square, wedge_channel, write_mesh
from .boundary import AdiabaticWall, Dirichlet, FarField, InviscidWall, IsothermalWall, PressureOutflow
from .hdg import Discretization, HDGState
from .newton import MarchConfig, newton_march
from .shock import SensorConfig, ShockCapture
from .verification import ConvergenceTable, convergence_rate, entropy_error_l2, grouped_errors
from .cases import get_case, solve, convergence_study
from .config import RunConfig, load_config, parse_config

__version__ = "0.1.0"

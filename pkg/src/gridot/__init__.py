"""Sample-based optimal transport on adaptively refined rectangular grids."""

from .barycenter import (
    BarycenterProblem,
    BarycenterResult,
    barycenter,
    barycenter_step,
    interpolate,
)
from .density1d import LinearDensity1D, fit_linear_density, uniform_density
from .errors import InfeasibleError, InternalError, OutOfSupportError, ParseError
from .geometry import (
    AxisPartition,
    Grid,
    Refinement,
    SampleSet,
    WeightedPartition,
    assign_weights,
    cell_neighbors,
    initial_grid,
    load_samples,
    locate,
    refine_grid,
)
from .localtransport import (
    CellDensity,
    CellPairMap,
    Map1D,
    cell_pair_cost,
    cell_pair_map,
    cost_1d,
    map_1d,
)
from .lpsolver import (
    CouplingSolution,
    SparsityPattern,
    TransportationProblem,
    check_feasible,
    product_feasible,
    solve_transportation,
)
from .refinement import (
    LevelSolution,
    MarginalModel,
    SolveConfig,
    TransportSolution,
    expand_pattern,
    fit_cell_densities,
    minimal_pattern,
    scaled_feasible,
    solve,
)
from .transportmap import (
    MapEvaluator,
    cube_root_map,
    distance_error,
    evaluate_map,
    gaussian_affine_map,
    gaussian_wasserstein,
    map_error,
    push_samples,
    wasserstein_distance,
)

__version__ = "0.1.0"

"""narxcomp: compensation-input synthesis from identified NARX polynomial models.

The package turns an identified polynomial NARX model of a nonlinear (and
possibly hysteretic) plant into a feedforward compensator: at every step
the model is inverted for the input that would make the output follow a
reference, by solving a small polynomial whose admissible root is selected
under range and branch constraints.
"""

from .poly import (
    AlgebraicPolynomial,
    RootSet,
    DegreeMismatch,
    NoConvergence,
)
from .model import (
    Factor,
    FixedPoint,
    HysteresisLoop,
    NarxModel,
    Regime,
    Signal,
    Term,
    fixed_points,
    hysteresis_loop,
    jacobian_eigen,
    load_model,
    loop_inverse,
    one_step,
    simulate_free_run,
    static_curve,
    static_polynomial,
    validate,
)
from .compensator import (
    HOLD,
    BranchPolynomials,
    CompensationSession,
    NoFeasibleRoot,
    dynamic_comp_poly,
    hysteresis_comp_polys,
    init_dynamic,
    init_hysteresis,
    run,
    select_root,
    solve_static,
    static_comp_poly,
)
from .benchmarks import BoucWenPlant, HammersteinHeater, SignalSpec, generate
from .evaluation import (
    ExperimentReport,
    MonteCarloBand,
    compensation_experiment,
    effort,
    mape,
    monte_carlo,
    table_experiment,
)

__version__ = "0.1.0"

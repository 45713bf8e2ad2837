"""Symbolic-numeric super Lie calculus on superdomains."""

from .errors import (
    CommutationError,
    ContradictionError,
    DomainEvalError,
    DomainMismatchError,
    ExprSyntaxError,
    FlowDomainExitError,
    NotALoopError,
    ParityError,
    ScenarioError,
    SuperflowError,
    UndeclaredVariableError,
)
from .expr import diff, eval_expr, parse_expr, to_str
from .grassmann import (
    GrassmannNumber,
    SuperDomain,
    SuperFunction,
    eval_superfunction,
    gr_mul,
    grassmannify,
    substitute,
    superfunctions_equal,
)
from .fields import (
    InfinitesimalAction,
    LieSuperAlgebra,
    SuperVectorField,
    apply,
    bracket,
    check_algebra,
    check_homomorphism,
    fields_equal,
    induced_infinitesimal,
    reduced_field,
    support_sample,
)
from .jets import JetSuperMap, compose, jet_of_superfunction
from .dynamics import (
    FlowConfig,
    build_local_action,
    check_action_property,
    check_flows_commute,
    flow_even,
    flow_time_dependent,
    odd_exponential,
    pushforward_derivative_check,
)
from .holonomy import (
    DistributionSpec,
    GroupPath,
    HolonomyGerm,
    PathSegment,
    VerdictFlags,
    globalizability_verdict,
    holonomy,
    homotopy_invariance_check,
    involutivity_check,
    transport,
    verify_example_embedding,
)
from .scenario import Scenario, load_scenario, parse_scenario

__version__ = "0.1.0"

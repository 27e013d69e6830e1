"""Portfolio choice with proportional costs under a binding risky-weight cap.

The engine solves the free-boundary problem through a single scalar gap
parameter, evaluates welfare and turnover in closed form, verifies the policy
by simulating the reflected shadow market, and prices two applications:
broker selection and deposit rates under a leverage-cap cut.
"""

from .analytics import (
    AsymptoticAnalytics,
    ComparativeStaticsReport,
    FrictionAnalytics,
    asymptotics,
    equivalent_safe_rate,
    esr_frictionless_constrained,
    friction_analytics,
    liquidity_premium,
    share_turnover,
    turnover_comparative_statics,
    wealth_turnover,
)
from .applications import (
    BrokerEvaluation,
    BrokerOffer,
    DepositScenario,
    Table1Row,
    critical_leverage,
    deposit_rate,
    esr_loss_leading,
    evaluate_broker,
    iso_rate,
    table1,
)
from .errors import (
    BranchUndefined,
    ConstraintNotBinding,
    DegenerateConstraint,
    EngineError,
    InvalidParameter,
    NegativeRadicand,
    NoBracket,
    NonpositiveWealth,
    NoSolution,
    NumericalBlowup,
    PoleEncountered,
    RequiresLimitForm,
    SignError,
    SingularRatio,
    SpreadViolation,
    ToleranceNotReached,
)
from .gap import GapSolution, lambda_asymptotic, solve_gap, terminal_mismatch
from .model import (
    DerivedQuantities,
    MarketSpec,
    derive,
    epsilon_from_one_sided,
    l_of_lambda,
    log_ul,
    one_sided_from_epsilon,
)
from .riccati import CaseTag, RiccatiCoefficients, WSolution, classify, w_eval, w_prime, w_second, w_solution
from .simulate import Endowment, SimConfig, SimulationResult, initial_y, run, shadow_price

__version__ = "0.1.0"

__all__ = [
    "AsymptoticAnalytics",
    "BranchUndefined",
    "BrokerEvaluation",
    "BrokerOffer",
    "CaseTag",
    "ComparativeStaticsReport",
    "ConstraintNotBinding",
    "DegenerateConstraint",
    "DepositScenario",
    "DerivedQuantities",
    "Endowment",
    "EngineError",
    "FrictionAnalytics",
    "GapSolution",
    "InvalidParameter",
    "MarketSpec",
    "NegativeRadicand",
    "NoBracket",
    "NonpositiveWealth",
    "NoSolution",
    "NumericalBlowup",
    "PoleEncountered",
    "RequiresLimitForm",
    "RiccatiCoefficients",
    "SignError",
    "SimConfig",
    "SimulationResult",
    "SingularRatio",
    "SpreadViolation",
    "Table1Row",
    "ToleranceNotReached",
    "WSolution",
    "asymptotics",
    "classify",
    "critical_leverage",
    "deposit_rate",
    "derive",
    "epsilon_from_one_sided",
    "equivalent_safe_rate",
    "esr_frictionless_constrained",
    "esr_loss_leading",
    "evaluate_broker",
    "friction_analytics",
    "initial_y",
    "iso_rate",
    "l_of_lambda",
    "lambda_asymptotic",
    "liquidity_premium",
    "log_ul",
    "one_sided_from_epsilon",
    "run",
    "shadow_price",
    "share_turnover",
    "solve_gap",
    "table1",
    "terminal_mismatch",
    "turnover_comparative_statics",
    "w_eval",
    "w_prime",
    "w_second",
    "w_solution",
    "wealth_turnover",
]

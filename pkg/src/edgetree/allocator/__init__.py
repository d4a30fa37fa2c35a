from .exact import solve_exact
from .instance import (
    Allocation,
    AllocationError,
    AllocationInstance,
    BudgetExceeded,
    ConstraintViolated,
    Infeasible,
    InvalidInstance,
    build_allocation,
    check_constraints,
    load_csv_instance,
    load_instance,
    objective,
    objective_terms,
)
from .kernel import BACKEND
from .oracle import solve_oracle
from .router import RandomPolicy, RouterState, route_request
from .sample import sample_instance

__all__ = [
    "Allocation", "AllocationError", "AllocationInstance", "BACKEND", "BudgetExceeded",
    "ConstraintViolated", "Infeasible", "InvalidInstance", "RandomPolicy", "RouterState",
    "build_allocation", "check_constraints", "load_csv_instance", "load_instance", "objective",
    "objective_terms", "route_request", "sample_instance", "solve_exact", "solve_oracle",
]

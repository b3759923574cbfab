"""Fast box-property verification for two-level lattice (TLL) ReLU networks."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    AffineFn,
    MultiTLLSpec,
    OutputBox,
    Polytope,
    TLLSpec,
    eval_multi,
    eval_scalar,
    validate,
)
from .verifier import Side, Status, Verdict, verify_box, verify_scalar_lb, verify_scalar_ub  # noqa: E402

__all__ = [
    "AffineFn",
    "MultiTLLSpec",
    "OutputBox",
    "Polytope",
    "TLLSpec",
    "Side",
    "Status",
    "Verdict",
    "eval_multi",
    "eval_scalar",
    "validate",
    "verify_box",
    "verify_scalar_lb",
    "verify_scalar_ub",
]

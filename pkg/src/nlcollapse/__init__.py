"""Nonlocal boxes, majority-amplification protocols and the A+B>16 collapse criterion."""
from .boxes import (
    BiasVector,
    NonlocalBox,
    ValidationReport,
    bias_vector,
    is_locally_uniform,
    locally_uniformize,
    mix,
    named_box,
    validate,
)
from .collapse import (
    IterationTrace,
    RecursionParams,
    classify_box,
    iterate,
    map_F,
    recursion_params,
    resource_count,
    steps_to_target,
)
from .protocols import (
    BooleanFunction,
    ProtocolConfig,
    SuccessReport,
    p0_enumerate,
    p0_exact,
    p1_enumerate,
    p1_formula,
    run_protocol,
)

__version__ = "0.1.0"

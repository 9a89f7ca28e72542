"""Exact-arithmetic toolkit for martingales on the binary tree,
bounded-variation synthesis, and dyadic cube measures."""

from .dyadics import Rat, parse_rat, rat_str, word_value
from .piecewise import (
    DerivBounds,
    PiecewiseFn,
    dyadic_deriv_bounds,
    exact_variation,
    grid_variation,
    integrate_piecewise,
    lp_power_norm,
    p_variation,
    slope,
    variation_norm,
)
from .martingale import (
    Enclosure,
    MartingaleTable,
    SignedMartingaleTable,
    StagedMartingale,
    ValueBounds,
    cdf_at_dyadic,
    cdf_enclosure,
    check_fairness,
    level_variation,
    measure_of_word,
    sup_stages,
    variation_lower_bound,
)
from .intervalre import (
    IncrementOracle,
    IntervalOracle,
    LinearOracle,
    MachineOracle,
    PrefixFreeMachine,
    StagedCdfOracle,
    fs_eval,
    oracle_from_machine,
    oracle_to_staged,
)
from .synthesis import (
    PreimageResult,
    SignedSynthesis,
    StageSchedule,
    ZigzagSpec,
    band_increment_check,
    build_signed_martingale,
    compute_stage_gates,
    gated_synthesis,
    variation_preimage,
    with_zero_prefix,
    zigzag_eval,
    zigzag_fn,
    zigzag_sum,
)
from .oscillator import (
    PhaseTable,
    build_oscillator,
    count_crossings,
    double_on_bit,
    double_on_pattern,
    constant_strategy,
    min_descendant_drop,
    oscillator_along,
    savings_fn,
    savings_transform,
)
from .cubes import CubeCombination, DyadicCube, DyadicCubeSet, cube_of_point
from .schnorr import (
    ExplicitTest,
    PointTest,
    RampApprox,
    RefinedTest,
    SchnorrTest,
    Sigma01Enum,
    band_function,
    char_approx,
    cube_average,
    g_partial_eval,
    lp_norm_pow,
    modulus_for_level,
    point_test,
    refine_test,
    tail_l1_norm,
    truncated_alternating,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]

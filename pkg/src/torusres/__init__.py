"""Exact resonance counting and Fourier-space solving on the 2-torus.

The package has four layers:

* :mod:`torusres.fixedpoint` -- 128-bit fixed-point fractions with exact
  mod-1 arithmetic.
* :mod:`torusres.resonance` -- resonance predicates, counting scans and
  margin scans over integer mode pairs.
* :mod:`torusres.spectral` -- truncated Fourier fields, the periodically
  forced Schrodinger operator and its inverse, convolution and decay
  diagnostics.
* :mod:`torusres.experiments` -- seeded random-parameter experiments that
  compare empirical resonance counts against exact expectations.

:mod:`torusres.cli` exposes the batch command-line front end.
"""

from torusres.fixedpoint import FixedFraction, nearest_int_dist, split_real
from torusres.resonance import (
    CountingReport,
    DenominatorParams,
    MarginScanResult,
    ModeIndex,
    ResonanceWitness,
    count_resonances,
    denominator_value,
    dyadic_block_counts,
    margin_scan,
    mode_distance,
    predicted_count,
    wave_margin_scan,
)
from torusres.spectral import (
    DecayReport,
    FourierField,
    ReducedGeometry,
    ResonanceError,
    SolvabilityError,
    TorusGeometry,
    apply_operator,
    convolve,
    decay_report,
    sample_field,
    solve_schrodinger,
)
from torusres.experiments import (
    CurveReport,
    ExpectationReport,
    GrowthProbeReport,
    SampleSpec,
    TailTransitionReport,
    counting_curve,
    exact_block_expectation,
    exact_expectation,
    expectation_experiment,
    sample_params,
    tail_growth_probe,
    tail_transition_experiment,
)

__version__ = "0.1.0"

__all__ = [
    "FixedFraction",
    "nearest_int_dist",
    "split_real",
    "CountingReport",
    "DenominatorParams",
    "MarginScanResult",
    "ModeIndex",
    "ResonanceWitness",
    "count_resonances",
    "denominator_value",
    "dyadic_block_counts",
    "margin_scan",
    "mode_distance",
    "predicted_count",
    "wave_margin_scan",
    "DecayReport",
    "FourierField",
    "ReducedGeometry",
    "ResonanceError",
    "SolvabilityError",
    "TorusGeometry",
    "apply_operator",
    "convolve",
    "decay_report",
    "sample_field",
    "solve_schrodinger",
    "CurveReport",
    "ExpectationReport",
    "GrowthProbeReport",
    "SampleSpec",
    "TailTransitionReport",
    "counting_curve",
    "exact_block_expectation",
    "exact_expectation",
    "expectation_experiment",
    "sample_params",
    "tail_growth_probe",
    "tail_transition_experiment",
    "__version__",
]

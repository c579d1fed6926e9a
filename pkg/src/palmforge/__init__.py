"""palmforge: a Monte Carlo laboratory for Palm calculus.

Build Palm-side point configurations, push them through independent
stationary-increment displacement fields, reconstruct stationary samples
by length-biased inversion, and statistically certify every step with an
invariance-identity verifier.
"""

from .groups import GroupDomain, GroupKind, Window, cyclic_group, integer_lattice, real_line
from .configs import (
    MERGE_TOL,
    DisplacementTable,
    PointConfig,
    collision_count,
    displacement_table,
    neighbors_of_zero,
    perturb,
    point_config,
    translate,
    voronoi_zero_volume,
)
from .increments import (
    HeavyTailWalk,
    IidWalk,
    LinearDrift,
    NegationField,
    TwoSidedBrownian,
    UniformCyclic,
    ZeroField,
    sample_field,
    shift_table,
    sublinear_diagnostic,
)
from .palm import (
    BatchRole,
    ExpGaps,
    FixedGap,
    GammaGaps,
    LatticePalm,
    PoissonPalm,
    RenewalPalm,
    SampleBatch,
    UniformBump,
    invert_palm_compact,
    invert_palm_realline,
    make_palm_batch,
    palm_of_stationary,
    perturb_palm,
    sample_lattice_palm,
    sample_poisson_palm,
    sample_renewal_palm,
    voronoi_mass_estimate,
)
from .verify import (
    LaplaceBump,
    TestReport,
    canonical_battery,
    ergodic_average_decay,
    lemma_identity_check,
    mecke_battery,
    mecke_residual,
    stationarity_test,
)
from .streams import substream

__version__ = "0.1.0"

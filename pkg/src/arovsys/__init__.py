"""Canonical systems in the Arov gauge: transfer matrices, Schur spectral
functions, the entropy functional, and the sum rule tying them together."""

from .errors import ArovsysError, InputError, VerificationError
from .jalg import (
    CALJ,
    JAY,
    TriangularFactor,
    arov_normalize,
    classify,
    j_defect,
    mobius,
    orlov_modulus,
    polar_ju,
    product_convergence_probe,
    psd_sqrt2,
    signature_conjugator,
    triangular_expanding_check,
)
from .profiles import ArovProfile, Bump, Constant, Samples, Steps, free_profile, step_profile
from .spectral import (
    EntropyReport,
    SchurGrid,
    SumRuleReport,
    coefficient_integral,
    entropy,
    herglotz_density,
    herglotz_identity_check,
    mean_log_a22_check,
    schur_at,
    schur_grid,
    sigma_type,
    sumrule,
)
from .system import (
    PdBHamiltonian,
    TransferResult,
    arov_from_pdb,
    coeff_matrices,
    monotonicity_check,
    mult_integral,
    pdb_transfer,
    to_pdb,
    transfer,
    transfer_at_i,
    transfer_grid,
)

__version__ = "0.1.0"

__all__ = [
    "ArovsysError",
    "InputError",
    "VerificationError",
    "JAY",
    "CALJ",
    "TriangularFactor",
    "j_defect",
    "classify",
    "psd_sqrt2",
    "orlov_modulus",
    "polar_ju",
    "arov_normalize",
    "triangular_expanding_check",
    "mobius",
    "signature_conjugator",
    "product_convergence_probe",
    "ArovProfile",
    "Constant",
    "Steps",
    "Bump",
    "Samples",
    "free_profile",
    "step_profile",
    "TransferResult",
    "PdBHamiltonian",
    "coeff_matrices",
    "transfer",
    "transfer_at_i",
    "transfer_grid",
    "to_pdb",
    "pdb_transfer",
    "arov_from_pdb",
    "mult_integral",
    "monotonicity_check",
    "SchurGrid",
    "EntropyReport",
    "SumRuleReport",
    "schur_at",
    "schur_grid",
    "entropy",
    "sigma_type",
    "coefficient_integral",
    "sumrule",
    "mean_log_a22_check",
    "herglotz_density",
    "herglotz_identity_check",
    "__version__",
]

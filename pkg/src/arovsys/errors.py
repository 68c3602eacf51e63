"""Exception types shared across the package.

Input/contract violations derive from ValueError so callers that only know
the stdlib still catch them sensibly; numerical verification failures form
their own branch so the CLI can map them to a distinct exit code.
"""


class ArovsysError(Exception):
    """Base class for all package-specific errors."""


class InputError(ArovsysError, ValueError):
    """A precondition on user-supplied data failed."""


class VerificationError(ArovsysError):
    """A numerical contract that should hold failed beyond tolerance."""


# -- matrix algebra ---------------------------------------------------------

class NotPSD(InputError):
    """Matrix has an eigenvalue below -tol; no PSD square root."""


class NotContractive(VerificationError):
    """j-contractivity precondition failed beyond tolerance."""


class SingularModulus(VerificationError):
    """The j-modulus is numerically singular; no polar factorization."""


class NotUnimodular(InputError):
    """det differs from 1 beyond tolerance."""


class HyperbolicOverflow(InputError):
    """|b21| >= |b22|: no hyperbolic rotation annihilates the (2,1) entry."""


class PoleHit(InputError):
    """Moebius denominator vanished within tolerance."""


# -- canonical systems ------------------------------------------------------

class InvalidProfile(InputError):
    """Coefficient profile violates positivity or structural constraints."""


class StepTooLarge(VerificationError):
    """Step-doubling error estimate of the ODE integrator exceeded tolerance."""


class GaugeViolation(VerificationError):
    """The chain at z = i is not upper triangular to tolerance."""


class NormalizationFailure(VerificationError):
    """Triangular normalization of the chain failed at some grid point."""


class NonsmoothHamiltonian(VerificationError):
    """Finite-difference coefficient extraction did not converge."""


# -- spectral ---------------------------------------------------------------

class NoConvergence(VerificationError):
    """An iterative limit failed to go Cauchy before the cap."""


class ComplexWAtI(InputError):
    """w(i) has a nonzero imaginary part; identity requires real w(i)."""


# -- operator nodes ---------------------------------------------------------

class SingularResolvent(VerificationError):
    """(I - zeta U P_H) was numerically singular."""


class DefectMismatch(InputError):
    """Subspace dimensions of an isometry spec are inconsistent."""


class IllConditioned(VerificationError):
    """Resolvent condition number exceeded the safety bound."""


class SingularS1(InputError):
    """The s1 block is singular or not square; no Potapov-Ginzburg transform."""

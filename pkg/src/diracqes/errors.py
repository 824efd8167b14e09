"""Exception hierarchy for the diracqes package.

Every failure mode that callers are expected to branch on gets its own
class; generic programming errors (wrong types, impossible states) use the
built-in exceptions.
"""

from __future__ import annotations


class DiracQesError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(DiracQesError):
    """A preset or CLI invocation is missing a required parameter or
    carries an unknown one.  The message names the offending parameter."""


class ValidationError(DiracQesError):
    """An input value violates a structural invariant (kappa parity,
    empty matrix, malformed range, ...)."""


class DomainError(DiracQesError):
    """Parameters are outside the regime where the requested quantity is
    defined (no confinement, |epsilon| >= M for a bound state, ...)."""


class SupercriticalCouplingError(DomainError):
    """kappa**2 + beta**2 - alpha**2 <= 0 (or alpha**2 >= kappa**2):
    the indicial exponent turns complex and the origin behaviour is no
    longer of the regular power type."""


class SingularConfigurationError(DiracQesError):
    """A parameter combination makes the construction singular
    (cos 2*omega = 0, or beta1 = 0 where coefficient formulas divide by
    beta1 -- the latter case belongs to the exactly solvable branch)."""


class PoleError(DiracQesError):
    """Applying an operator left an uncancelled 1/r (or 1/x) term.

    The residue is stored so the caller can see how badly cancellation
    failed."""

    def __init__(self, message: str, residue: float = 0.0):
        super().__init__(message)
        self.residue = residue


class StructureError(DiracQesError):
    """A gauge conjugation produced terms outside the representable form
    (pole order > 1, or unmatched power parity under x = r**2).  Usually
    signals a transform that does not fit the potential family."""


class NoBoundStateError(DiracQesError):
    """The quantization condition has no root in the bound-state window
    for the requested level."""


class NoAlgebraicSolutionError(DiracQesError):
    """A closed-form constraint produced no admissible branch (for
    example alpha**2 < 0 on every branch)."""


class NoRootInBracketError(DiracQesError):
    """The shooting mismatch does not change sign over the supplied
    energy bracket."""


class NotQuantizedError(DiracQesError):
    """The second-order operator's spectral parameter is not at a
    nonnegative integer, so the generator decomposition does not exist."""


class ConvergenceError(DiracQesError):
    """An iterative search exhausted its iteration budget.  The message
    carries the final bracket/diagnostics."""

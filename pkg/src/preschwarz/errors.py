"""Exception hierarchy.  Each class carries a stable machine-readable ``code``
used by the CLI reports."""


class PreschwarzError(Exception):
    code = "error"


class IncompatibleJets(PreschwarzError, ValueError):
    code = "incompatible_jets"


class BadIndex(PreschwarzError, IndexError):
    code = "bad_index"


class BranchError(PreschwarzError, ValueError):
    code = "branch_error"


class DomainError(PreschwarzError, ValueError):
    code = "domain_error"


class NotLocallyBiholomorphic(PreschwarzError, ValueError):
    code = "not_locally_biholomorphic"


class SingularAffine(PreschwarzError, ValueError):
    code = "singular_affine"


class UnsupportedDimension(PreschwarzError, ValueError):
    code = "unsupported_dimension"


class ObstructionNonzero(PreschwarzError, ValueError):
    code = "obstruction_nonzero"


class SymmetryViolation(PreschwarzError, ValueError):
    code = "symmetry_violation"


class NotExact(PreschwarzError, ValueError):
    code = "not_exact"


class SingularBasepoint(PreschwarzError, ValueError):
    code = "singular_basepoint"


class NotIntegrable(PreschwarzError, ValueError):
    """An overdetermined recursion produced disagreeing coefficients."""
    code = "not_integrable"

    def __init__(self, message, discrepancy=None):
        super().__init__(message)
        self.discrepancy = discrepancy


class NoConvergence(PreschwarzError, RuntimeError):
    code = "no_convergence"


class InvalidSpec(PreschwarzError, ValueError):
    code = "invalid_spec"


class DependentSeeds(PreschwarzError, ValueError):
    code = "dependent_seeds"

"""Exception types raised across the package."""


class FoldcontError(Exception):
    """Base class for all package errors."""


class ZeroRhs(FoldcontError):
    """Relative residue requested for a zero right-hand side."""


class NonFinite(FoldcontError):
    """A map evaluation produced NaN or Inf."""


class ConvergenceFailure(FoldcontError):
    """An iterative eigensolver did not converge."""


class SingularShiftedOperator(FoldcontError):
    """The rank-one shifted operator could not be factorized."""


class NearSingularJacobian(FoldcontError):
    """DF(u) is too close to singular for a regular tangent."""


class TransversalityFailure(FoldcontError):
    """The codomain path is tangent to the image of the critical set."""


class NewtonDivergence(FoldcontError):
    """The corrector diverged."""


class MaxIterations(FoldcontError):
    """The corrector hit its iteration cap."""


class StepUnderflow(FoldcontError):
    """Step size fell below the configured minimum."""


class SeedNotOnDiagram(FoldcontError):
    """The base point of a line does not solve F(u) = g."""


class BudgetExhausted(FoldcontError):
    """A work budget was exhausted."""


class SingularOrthantMatrix(FoldcontError):
    """The matrix A - D^O is singular for some orthant."""


class SeedNotNearCritical(FoldcontError):
    """Seed for critical curve tracing is not close to det DF = 0."""


class ComponentBudgetExceeded(FoldcontError):
    """Flower computation exceeded its component budget."""


class EigenvalueStraddle(FoldcontError):
    """The first eigenvalue is not enclosed by (l_minus, l_plus)."""


class SingularAdjacent(FoldcontError):
    """An orthant matrix adjacent to a slab is singular."""


class DisconnectedDomain(FoldcontError):
    """A grid mask has more than one connected component."""


class NotSymmetric(FoldcontError):
    """An ingested matrix is not symmetric."""


class BadFormat(FoldcontError):
    """A matrix file could not be parsed."""


class NoInitialSolution(FoldcontError):
    """No first solution could be found for an experiment."""


class ConfigError(FoldcontError):
    """An experiment configuration failed validation."""

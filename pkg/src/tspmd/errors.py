"""Exception hierarchy for the tspmd toolkit.

Every domain error derives from TspmdError so callers (and the CLI) can
distinguish bad inputs from programming errors.
"""


class TspmdError(Exception):
    """Base class for all toolkit errors."""


# --- instance construction -------------------------------------------------

class AsymmetricMetric(TspmdError):
    """A travel-time matrix is not symmetric (or has a nonzero diagonal)."""


class TriangleViolation(TspmdError):
    """A matrix violates the triangle inequality.

    Carries a witness triple (i, k, j) with d[i,j] > d[i,k] + d[k,j].
    """

    def __init__(self, metric_name, i, k, j, slack):
        self.metric_name = metric_name
        self.witness = (i, k, j)
        self.slack = slack
        super().__init__(
            f"{metric_name} violates the triangle inequality: "
            f"d[{i},{j}] exceeds d[{i},{k}] + d[{k},{j}] by {slack:.3g}"
        )


class DepotNotTruckVisitable(TspmdError):
    """Node 0 is missing from the truck-eligible set."""


class UncoveredNode(TspmdError):
    """Some node is neither truck- nor drone-eligible."""


class NonpositiveAlpha(TspmdError):
    """Proportional instances need a speedup factor > 0."""


class EmptyIntersection(TspmdError):
    """The drone speedup is undefined: fewer than two nodes are eligible
    for both vehicles (or no eligible arc has positive drone time)."""


# --- sorties ----------------------------------------------------------------

class CatalogExplosion(TspmdError):
    """Sortie enumeration exceeded the configured ceiling."""


class LoopInput(TspmdError):
    """split_sortie was called on a loop sortie."""


class SplitAmbiguity(TspmdError):
    """The split index of a non-loop sortie is not unique; carries the
    offending sortie and the candidate indices."""


# --- solutions and schedules ------------------------------------------------

class DanglingOperation(TspmdError):
    """A drone operation's start/end node does not match the truck route."""


class EncodingOverflow(TspmdError):
    """A solution does not fit into the 2*|N| time-indexed positions."""


# --- solver -----------------------------------------------------------------

class NoFeasibleSolution(TspmdError):
    """The requested mode admits no feasible solution for this instance."""


# --- milp -------------------------------------------------------------------

class CatalogMissing(TspmdError):
    """Model construction needs an enumerated sortie catalog."""


# --- bounds and transformations ----------------------------------------------

class PreconditionViolated(TspmdError):
    """A bound or transformation was invoked outside its premises."""


class TransformFailed(TspmdError):
    """A route transformation hit a state its proof says cannot occur."""


# --- heuristics ---------------------------------------------------------------

class TruckCannotVisitAll(TspmdError):
    """Christofides-based heuristics require every node to be truck-eligible."""


class MatchingBudgetExceeded(TspmdError):
    """Too many odd-degree vertices for the exact matching routine."""


class TooLarge(TspmdError):
    """Brute-force oracle invoked beyond its size limit."""


class InfeasibleInput(TspmdError):
    """A back-mapping received a solution it cannot turn into a cover."""


# --- fixtures ------------------------------------------------------------------

class UnknownFixture(TspmdError):
    """No bundled fixture with that name."""

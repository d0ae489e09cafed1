"""Exception types raised across the package."""


class BifLabError(Exception):
    """Base class; `kind` is used in machine-readable error reports."""

    kind = "error"

    def to_dict(self):
        return {"error": self.kind, "message": str(self)}


class DegenerateMap(BifLabError):
    kind = "degenerate-map"


class RootFindingFailure(BifLabError):
    kind = "root-finding-failure"


class DegenerateSample(BifLabError):
    kind = "degenerate-sample"


class ConvergenceFailure(BifLabError):
    kind = "convergence-failure"


class DegenerateLattice(BifLabError):
    kind = "degenerate-lattice"


class DegenerationOnDisc(BifLabError):
    kind = "degeneration-on-disc"


class OutOfDomain(BifLabError):
    kind = "out-of-domain"


class ContinuationBroken(BifLabError):
    kind = "continuation-broken"

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node

    def to_dict(self):
        out = super().to_dict()
        out["node"] = None if self.node is None else list(self.node)
        return out


class TreeBudgetExceeded(BifLabError):
    kind = "tree-budget-exceeded"


class AxiomViolation(BifLabError):
    kind = "axiom-violation"

    def __init__(self, message, axiom=None, witness=None):
        super().__init__(message)
        self.axiom = axiom
        self.witness = witness

    def to_dict(self):
        out = super().to_dict()
        out["axiom"] = self.axiom
        out["witness"] = self.witness
        return out


class NotProper(BifLabError):
    kind = "not-proper"


class AnomalyNoIntersection(BifLabError):
    kind = "anomaly-no-intersection"


class BudgetExceeded(BifLabError):
    kind = "budget-exceeded"


class DegenerateCloud(BifLabError):
    kind = "degenerate-cloud"


class InsufficientPairs(BifLabError):
    kind = "insufficient-pairs"


class ConfigError(BifLabError):
    kind = "config-error"

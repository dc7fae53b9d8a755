"""Exception hierarchy shared by all flowlab modules."""


class FlowLabError(Exception):
    """Base class for domain errors (the CLI maps these to exit code 1)."""


# exactnum
class EmptyInput(FlowLabError):
    pass


class NonPositiveValue(FlowLabError):
    pass


class RationalParseError(FlowLabError, ValueError):
    pass


# flownet
class NetworkError(FlowLabError):
    pass


class UnbalancedSupplies(NetworkError):
    def __init__(self, total):
        super().__init__(f"balances sum to {total}, expected 0")
        self.total = total


class DanglingEndpoint(NetworkError):
    def __init__(self, arc):
        super().__init__(f"arc {arc} has an endpoint outside the node table")
        self.arc = arc


class NegativeCapacity(NetworkError):
    def __init__(self, arc):
        super().__init__(f"arc {arc} has negative capacity")
        self.arc = arc


class DuplicateLabel(NetworkError):
    def __init__(self, label):
        super().__init__(f"label {label!r} used more than once")
        self.label = label


class SelfLoop(NetworkError):
    def __init__(self, arc):
        super().__init__(f"arc {arc} has tail == head")
        self.arc = arc


class InfeasibleFlow(NetworkError):
    def __init__(self, arc=None, node=None, detail=""):
        where = f"arc {arc}" if arc is not None else f"node {node}"
        super().__init__(f"infeasible flow at {where}{': ' + detail if detail else ''}")
        self.arc = arc
        self.node = node


# ssp
class NegativeCycleDetected(FlowLabError):
    pass


class IterationBudgetExceeded(FlowLabError):
    def __init__(self, budget):
        super().__init__(f"more than {budget} iterations")
        self.budget = budget


class UnboundedPath(FlowLabError):
    pass


# netsimplex
class NotATree(FlowLabError):
    pass


class InfeasibleStart(FlowLabError):
    pass


class UnboundedCycle(FlowLabError):
    pass


class PivotBudgetExceeded(FlowLabError):
    def __init__(self, budget):
        super().__init__(f"more than {budget} pivots")
        self.budget = budget


class DegeneratePivot(FlowLabError):
    def __init__(self, index):
        super().__init__(f"pivot {index} pushes zero flow")
        self.index = index


# gadgets
class IndexOrder(FlowLabError, ValueError):
    pass


class NonPositiveEntry(FlowLabError, ValueError):
    pass


class EmptyInstance(FlowLabError, ValueError):
    pass


class LevelOutOfRange(FlowLabError, ValueError):
    pass


class InvalidR(FlowLabError, ValueError):
    pass


class WrongFamily(FlowLabError, ValueError):
    pass


# experiments
class InstanceTooLarge(FlowLabError, ValueError):
    pass


class HorizonTooSmall(FlowLabError, ValueError):
    pass

"""Exception types shared across the package."""


class ListContractError(Exception):
    """Base class for all package errors."""


class ErewViolationError(ListContractError):
    """Two distinct processors touched the same cell in one round."""

    def __init__(self, message, violations=1):
        super().__init__(message)
        self.violations = violations


class BatchDependenceError(ListContractError):
    """A step read a cell that another task of the same step writes.

    This is an internal consistency failure: step outcomes would depend on
    the processor count, so the engine refuses to proceed.
    """


class ContractPreconditionError(ListContractError):
    """contract() called on non-adjacent or inactive nodes."""


class ForestFormatError(ListContractError):
    """Forest text input is malformed or violates the list invariants."""


class ImproperColoringError(ListContractError):
    """A coloring pass received colors equal across a link."""


class OrientationError(ListContractError):
    """Column keys of a chain match neither direction of the periodic pattern."""


class UncoveredCaseError(ListContractError):
    """The uniformity step met a configuration outside the implemented cases.

    Carries a snapshot of the offending walk so the instance can be
    reproduced and documented rather than silently patched.
    """

    def __init__(self, message, snapshot=None):
        super().__init__(message)
        self.snapshot = snapshot or {}

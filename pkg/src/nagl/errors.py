"""Exception classes shared across the package.

The CLI maps these onto distinct exit codes: input problems (ValueError and
friends) exit 2, resource caps exit 3, timeouts exit 4.
"""


class CapExceeded(RuntimeError):
    """A configured state/enumeration/memory cap would be exceeded.

    Raised before any infeasible allocation or enumeration starts, with a
    message naming the cap and suggesting sparser inputs or gadget oracles.
    """


class SolveTimeout(RuntimeError):
    """A cooperative wall-clock budget ran out between pipeline stages."""

"""Exception types shared across the package and mapped to CLI exit codes."""


class UsageError(Exception):
    """Bad arguments or malformed input files (CLI exit code 1)."""


class InfeasibleError(Exception):
    """The requested problem has no feasible solution (CLI exit code 2)."""


class OracleSizeError(Exception):
    """Instance exceeds the enumeration bound of an exact oracle (CLI exit code 2)."""


class InternalCheckError(Exception):
    """An internal invariant failed; indicates a bug (CLI exit code 3)."""

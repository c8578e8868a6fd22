class ContractError(ValueError):
    """Operands violate an operation's precondition (mismatched moduli, levels, shapes)."""


class InconsistentInputError(ValueError):
    """Input data is internally inconsistent (non-integral CRT lift, failed identity)."""


class ConstraintError(ValueError):
    """An entry constraint map forces some entry to two different values."""

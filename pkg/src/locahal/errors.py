"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed or out-of-contract input (bad file, unknown point, bad flag)."""


class AxiomViolation(ValueError):
    """A finite space fails one of the structural axioms.

    ``axiom`` carries the axiom label, e.g. ``"(H1)(a)"`` or ``"(Hp 1)"``.
    """

    def __init__(self, axiom, message, witness=None):
        super().__init__(f"{axiom}: {message}")
        self.axiom = axiom
        self.witness = witness


class ConfigurationError(ValueError):
    """Parameters (delta, cutoff constants, ...) violate a required inequality."""

    def __init__(self, inequality, message):
        super().__init__(f"{inequality}: {message}")
        self.inequality = inequality


class RangeError(ValueError):
    """A radius or scale lies outside the admissible range."""


class ConstructionError(RuntimeError):
    """A construction step could not be completed (e.g. no admissible parent)."""

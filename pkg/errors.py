"""Exception hierarchy. Protocol aborts are outcomes, never exceptions."""


class SfcError(Exception):
    """Base for every error raised by this package."""


class DimensionError(SfcError, ValueError):
    pass


class DomainError(SfcError, ValueError):
    pass


class ParameterError(SfcError, ValueError):
    pass


class InsufficientPoolError(SfcError, ValueError):
    pass


class UsageError(SfcError, ValueError):
    pass


class StructuralError(SfcError, RuntimeError):
    """Raised when protocol state is inconsistent, i.e. an engine bug."""


class EnumerationCapError(SfcError, RuntimeError):
    def __init__(self, atoms: int, cap: int):
        self.atoms = atoms
        self.cap = cap
        super().__init__(
            f"exact enumeration needs {atoms} atoms, cap is {cap}; use smaller n or k"
        )

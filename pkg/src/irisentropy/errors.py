"""Exception types raised across the package."""


class IrisEntropyError(Exception):
    """Base class for all package errors."""


class LayoutMismatch(IrisEntropyError, ValueError):
    pass


class InsufficientOverlap(IrisEntropyError, ValueError):
    """Too few jointly valid bits for a comparison to be scored."""

    def __init__(self, valid_bits, minimum):
        super().__init__(f"only {valid_bits} jointly valid bits (minimum {minimum})")
        self.valid_bits = valid_bits
        self.minimum = minimum


class SpecInvalid(IrisEntropyError, ValueError):
    pass


class DomainError(IrisEntropyError, ValueError):
    pass


class DegenerateSample(IrisEntropyError, ValueError):
    pass


class EmptySample(IrisEntropyError, ValueError):
    pass


class NonPositiveRate(IrisEntropyError, ValueError):
    pass


class IncompatibleData(IrisEntropyError, ValueError):
    pass


class FormatError(IrisEntropyError, ValueError):
    """Malformed template or score file; ``offset`` is the byte (or line) position."""

    def __init__(self, message, offset=None, path=None):
        where = []
        if path is not None:
            where.append(str(path))
        if offset is not None:
            where.append(f"offset {offset}")
        prefix = f"{': '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.offset = offset
        self.path = path

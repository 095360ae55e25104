"""Exception hierarchy shared by every layer of the engine."""


class SlalogError(Exception):
    """Base class for all engine errors."""


class ParseError(SlalogError):
    def __init__(self, message, line=0, column=0, origin="<string>", path=None):
        self.message = message
        self.line = line
        self.column = column
        self.origin = origin
        self.path = path
        where = f"{origin}:{line}:{column}" if path is None else f"{origin}: at {path}"
        super().__init__(f"{where}: {message}")


class SchemaError(ParseError):
    """XML document does not match the rbsla element vocabulary."""


class TypeHierarchyError(SlalogError):
    pass


class UnknownTypeError(TypeHierarchyError):
    pass


class KBUpdateError(SlalogError):
    pass


class AttachmentError(SlalogError):
    pass


class InstantiationError(SlalogError):
    """A goal needed ground arguments (negation or attachment input mode) but got variables."""


class UnsafeRuleError(SlalogError):
    pass


class ResourceError(SlalogError):
    """Step budget, depth bound or grounding bound exceeded."""


class TheoryError(SlalogError):
    pass


class NormError(SlalogError):
    pass


class EventOrderError(SlalogError):
    def __init__(self, message, position):
        self.position = position
        super().__init__(message)

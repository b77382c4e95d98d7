"""Exception hierarchy shared by every matk module."""


class MATKError(Exception):
    """Base class for all toolkit errors."""


class MissingFile(MATKError, FileNotFoundError):
    pass


class ParseError(MATKError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")


class TypeConflict(MATKError):
    def __init__(self, path):
        self.path = path
        super().__init__(f"map/scalar conflict at {path!r}")


class MissingKey(MATKError):
    def __init__(self, path):
        self.path = path
        super().__init__(f"missing required key {path!r}")


class BadType(MATKError):
    def __init__(self, path, expected, got):
        self.path = path
        self.expected = expected
        self.got = got
        super().__init__(f"{path!r}: expected {expected}, got {got}")


class UnresolvedName(MATKError):
    def __init__(self, registry, name):
        self.registry = registry
        self.name = name
        super().__init__(f"no {registry} registered under {name!r}")


class DuplicateName(MATKError):
    def __init__(self, registry, name):
        self.registry = registry
        self.name = name
        super().__init__(f"{registry} {name!r} is already registered")


class SchemaError(MATKError):
    def __init__(self, line, field, detail="missing or ill-typed"):
        self.line = line
        self.field = field
        super().__init__(f"line {line}: field {field!r} {detail}")


class UnknownClass(MATKError):
    def __init__(self, task, value):
        self.task = task
        self.value = value
        super().__init__(f"task {task!r} has no class {value!r}")


class MissingFeature(MATKError, KeyError):
    def __init__(self, id):
        self.id = id
        super().__init__(id)

    def __str__(self):
        return f"no cached features for id {self.id!r}"


class BackendUnavailable(MATKError):
    pass


class DecodeError(MATKError):
    pass


class DimensionMismatch(MATKError):
    pass


class DuplicateId(MATKError):
    pass


class BadMagic(MATKError):
    pass


class CorruptIndex(MATKError):
    pass


class MissingVerbalizer(MATKError):
    pass


class MissingVisualFeatures(MATKError):
    pass


class NonFiniteLoss(MATKError):
    pass


class NoLabels(MATKError):
    pass


class LengthMismatch(MATKError):
    pass


class EmptyInput(MATKError):
    pass


class SingleClass(MATKError):
    pass


class VersionMismatch(MATKError):
    pass


class CorruptCheckpoint(MATKError):
    pass


class DegenerateDesign(MATKError):
    pass


class ShapeMismatch(MATKError):
    pass

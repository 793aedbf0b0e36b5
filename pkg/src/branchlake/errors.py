"""Exception hierarchy for the branchlake package."""


class BranchLakeError(Exception):
    """Base class for all branchlake errors."""


class AlreadyExists(BranchLakeError):
    """A catalog is already initialized at the target path."""


class CatalogNotFound(BranchLakeError):
    """No catalog manifest at the given root."""


class UnknownBranch(BranchLakeError):
    """Referenced branch does not exist in the catalog."""


class DuplicateBranch(BranchLakeError):
    """Branch name already taken."""


class InvalidName(BranchLakeError):
    """Branch or table name violates the allowed character set."""


class UnknownTable(BranchLakeError):
    """Referenced table does not exist in any branch."""


class HashMismatch(BranchLakeError):
    """A table file's bytes no longer match the hash recorded in the manifest."""


class SchemaError(BranchLakeError):
    """Schema is malformed or data does not conform to it."""


class PlanTypeError(BranchLakeError):
    """A plan or expression failed type checking."""


class DivideByZero(BranchLakeError):
    """Arithmetic division by zero, or an average over zero rows."""


class UnsupportedQuestion(BranchLakeError):
    """QuerySpec does not name one of the supported question templates."""


class UnrecognizedQuestion(BranchLakeError):
    """Free-text question matched none of the supported templates."""


class BadParameter(BranchLakeError):
    """A question slot or config value is out of range or malformed."""


class EmptyBranchSet(BranchLakeError):
    """An operation over branches was given no branches."""


class NotBooleanQuestion(BranchLakeError):
    """Short-circuit evaluation requires a question with a boolean result."""


class UnknownKpi(BranchLakeError):
    """A sentence references a KPI not present in a branch model."""


class DuplicateId(BranchLakeError):
    """A per-branch id list contains duplicates."""


class BadConfig(BranchLakeError):
    """Generator or bench configuration violates its invariants."""


class SentenceParseError(BranchLakeError):
    """KPI sentence text does not conform to the grammar."""


class BranchExecutionError(BranchLakeError):
    """Wraps an execution failure with the branch it occurred on."""

    def __init__(self, branch: str, cause: Exception):
        super().__init__(f"branch {branch!r}: {cause}")
        self.branch = branch
        self.cause = cause

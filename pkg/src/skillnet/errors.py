"""Exception hierarchy shared across the package."""


class SkillNetError(Exception):
    """Base class for all package errors."""


# --- graph mutation errors ---

class DuplicateId(SkillNetError):
    """A skill with this id already exists in the graph."""


class EmptyTitle(SkillNetError):
    """Skill title must be non-empty."""


class UnknownEndpoint(SkillNetError):
    """Edge endpoint refers to a skill id that is not in the graph."""


class UnknownSkill(SkillNetError):
    """Statistics update references a skill id that is not in the graph."""


class WeightOutOfRange(SkillNetError):
    """Edge weight must lie in [0, 1]."""


class CycleWouldForm(SkillNetError):
    """Adding this edge would create a cycle in the dependency subgraph."""


class CycleDetected(SkillNetError):
    """Dependency subgraph contains a cycle (should be unreachable)."""


class AlreadyInitialized(SkillNetError):
    """Structural edge initialization ran on a graph that already has edges."""


class SuccessWithoutUse(SkillNetError):
    """A statistics entry recorded a success without a corresponding use."""


# --- persistence errors ---

class ParseError(SkillNetError):
    """Malformed snapshot, config, or record file.

    Carries optional line/column context for JSON syntax failures.
    """

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class VersionMismatch(SkillNetError):
    """Snapshot file was written with an unsupported format version."""


class ConfigInvalid(SkillNetError):
    """Configuration file or object failed validation."""


# --- proposer errors ---

class ProposerError(SkillNetError):
    """Base class for teacher-proposer failures."""


class ProposerUnavailable(ProposerError):
    """The proposer could not be reached or did not answer in time."""


class ProposerParseError(ProposerError):
    """The proposer answered but its payload was not a usable JSON array."""


class SchemaViolation(SkillNetError):
    """A proposed skill record does not satisfy the proposal schema."""


# --- numeric errors ---

class LengthMismatch(SkillNetError):
    """Parallel input sequences have different lengths."""

from enum import Enum
from typing import Annotated, Any, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# An opaque text atom: one character or one whitespace-delimited word, depending on the profile.
Token = str


class TokenizerProfile(str, Enum):
    CHAR = "char"
    WORD = "word"


class RenderMode(str, Enum):
    STRICT = "strict"
    LENIENT = "lenient"


class Backend(str, Enum):
    """Substring index used to maintain the match set"""

    POSITIONS = "positions"
    AUTOMATON = "automaton"


class SentinelRole(str, Enum):
    TRIGGER = "trigger"
    SCOPE_OPEN = "scope_open"
    SCOPE_CLOSE = "scope_close"
    PATCH_OPEN = "patch_open"
    PATCH_CLOSE = "patch_close"


class Tier(str, Enum):
    """Dataset purity level of a commit"""

    STRICT = "strict"  # one function, one hunk
    RELAXED = "relaxed"  # at most 5 functions, at most 5 hunks each
    REJECTED = "rejected"


class RecordKind(str, Enum):
    REVISION = "revision"
    GENERAL = "general"


class DiscardReason(str, Enum):
    SCOPE_NOT_FOUND = "scope_not_found"
    UNTERMINATED = "unterminated"
    MALFORMED = "malformed"


# Body-text names of the delimiters; accepted when parsing, never emitted.
SENTINEL_ALIASES: dict[str, SentinelRole] = {
    "<scope>": SentinelRole.SCOPE_OPEN,
    "</scope>": SentinelRole.SCOPE_CLOSE,
    "<patch>": SentinelRole.PATCH_OPEN,
    "</patch>": SentinelRole.PATCH_CLOSE,
}


class SentinelSet(BaseModel):
    """The five operational tokens of the augmented vocabulary"""

    model_config = ConfigDict(frozen=True)

    trigger: Token = Field("<|backtracking|>", description="Switches decoding into a revision episode")
    scope_open: Token = Field("<|OLD|>", description="Opens the localized scope")
    scope_close: Token = Field("<|/OLD|>", description="Closes the localized scope")
    patch_open: Token = Field("<|NEW|>", description="Opens the replacement patch")
    patch_close: Token = Field("<|/NEW|>", description="Closes the patch and commits the revision")

    @model_validator(mode="after")
    def validate_distinct(self) -> "SentinelSet":
        """Validate that all five sentinels are non-empty and pairwise distinct"""
        spellings = [self.trigger, self.scope_open, self.scope_close, self.patch_open, self.patch_close]
        if any(not s for s in spellings):
            raise ValueError("Sentinel spellings cannot be empty")
        if len(set(spellings)) != len(spellings):
            raise ValueError("Sentinel spellings must be pairwise distinct")
        return self

    def canonical(self) -> dict[SentinelRole, Token]:
        return {
            SentinelRole.TRIGGER: self.trigger,
            SentinelRole.SCOPE_OPEN: self.scope_open,
            SentinelRole.SCOPE_CLOSE: self.scope_close,
            SentinelRole.PATCH_OPEN: self.patch_open,
            SentinelRole.PATCH_CLOSE: self.patch_close,
        }

    def role_table(self) -> dict[Token, SentinelRole]:
        """Map every accepted spelling (canonical first, then aliases) to its role."""
        table = {token: role for role, token in self.canonical().items()}
        for alias, role in SENTINEL_ALIASES.items():
            table.setdefault(alias, role)
        return table

    def spellings(self) -> frozenset[Token]:
        return frozenset(self.role_table())


DEFAULT_SENTINELS = SentinelSet()


def _validate_code_tokens(tokens: tuple[Token, ...]) -> tuple[Token, ...]:
    if not all(tokens):
        raise ValueError("Tokens cannot be empty")
    return tokens


class RevisionEpisode(BaseModel):
    """One in-stream edit: replace the scope span by the patch span

    Sentinel collisions are checked by the enclosing Trajectory, which knows the active set.
    """

    model_config = ConfigDict(frozen=True)

    scope: tuple[Token, ...] = Field(..., min_length=1, description="Span of the buffer to replace")
    patch: tuple[Token, ...] = Field((), description="Replacement span, empty for a pure deletion")

    @field_validator("scope", "patch")
    @staticmethod
    def validate_tokens(v: tuple[Token, ...]) -> tuple[Token, ...]:
        return _validate_code_tokens(v)

    @property
    def serialized_length(self) -> int:
        return len(self.scope) + len(self.patch) + 5


TrajectoryItem = Token | RevisionEpisode


class Trajectory(BaseModel):
    """Flat interleaving of code tokens and revision episodes"""

    model_config = ConfigDict(frozen=True)

    items: tuple[TrajectoryItem, ...] = Field(default=(), description="Code tokens and episodes in emission order")
    sentinels: SentinelSet = Field(default=DEFAULT_SENTINELS, description="Operational tokens no code token may equal")

    @model_validator(mode="after")
    def validate_items(self) -> "Trajectory":
        """Validate that no code, scope or patch token is a spelling of the active sentinels"""
        reserved = self.sentinels.spellings()
        for item in self.items:
            tokens = (*item.scope, *item.patch) if isinstance(item, RevisionEpisode) else (item,)
            for token in tokens:
                if not token:
                    raise ValueError("Tokens cannot be empty")
                if token in reserved:
                    raise ValueError(f"Sentinel {token!r} cannot appear as a code token")
        return self

    def with_sentinels(self, sentinels: SentinelSet) -> "Trajectory":
        """The same items under another sentinel set, revalidated."""
        if sentinels == self.sentinels:
            return self
        return Trajectory(items=self.items, sentinels=sentinels)

    @property
    def episodes(self) -> list[RevisionEpisode]:
        return [item for item in self.items if isinstance(item, RevisionEpisode)]

    @property
    def code_tokens(self) -> list[Token]:
        return [item for item in self.items if isinstance(item, str)]

    @property
    def serialized_length(self) -> int:
        """Length of the linear stream: #code + sum(|s| + |s'| + 5)."""
        return len(self.code_tokens) + sum(e.serialized_length for e in self.episodes)


class AppendEvent(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["append"] = "append"
    index: int = Field(..., description="Stream position of the token")
    token: Token


class RevisionAppliedEvent(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["revision_applied"] = "revision_applied"
    index: int = Field(..., description="Stream position of the patch-close sentinel")
    window_start: int
    window_end: int
    old_span: tuple[Token, ...]
    new_span: tuple[Token, ...]


class RevisionDiscardedEvent(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["revision_discarded"] = "revision_discarded"
    index: int = Field(..., description="Stream position where the episode was abandoned")
    reason: DiscardReason
    detail: str | None = None


RenderEvent = Annotated[AppendEvent | RevisionAppliedEvent | RevisionDiscardedEvent, Field(discriminator="kind")]


class FunctionPair(BaseModel):
    """Vulnerable and patched versions of one function"""

    id: str = Field(..., description="Pair identifier")
    vulnerable: str = Field(..., description="Source text before the fix")
    patched: str = Field(..., description="Source text after the fix")
    meta: dict[str, str | None] = Field(default_factory=dict, description="Provenance: source_commit, cwe, language, function")

    @field_validator("id")
    @staticmethod
    def validate_id(v: str) -> str:
        if not v or not v.strip():
            raise ValueError("Pair id cannot be empty")
        return v

    @property
    def source_commit(self) -> str | None:
        return self.meta.get("source_commit")


class DiffHunk(BaseModel):
    """A contiguous diff region, in token indices of the vulnerable text"""

    model_config = ConfigDict(frozen=True)

    vul_start: int = Field(..., ge=0)
    vul_end: int = Field(..., ge=0)
    del_span: tuple[Token, ...]
    ins_span: tuple[Token, ...]

    @model_validator(mode="after")
    def validate_window(self) -> "DiffHunk":
        if self.vul_end - self.vul_start != len(self.del_span):
            raise ValueError("Hunk window length must equal the deleted span length")
        return self


class RecordMeta(BaseModel):
    model_config = ConfigDict(extra="allow")

    kind: RecordKind = RecordKind.REVISION
    tier: Tier | None = None
    latency_k: int | None = None
    profile: TokenizerProfile = TokenizerProfile.CHAR
    source_commit: str | None = None
    cwe: str | None = None
    language: str | None = None
    function: str | None = None
    diff_signature: str | None = None


class TrajectoryRecord(BaseModel):
    """Dataset row: a task prompt paired with a revision trajectory"""

    id: str
    spec: str = Field("", description="Security-neutral task description, supplied externally")
    trajectory: Trajectory
    meta: RecordMeta = Field(default_factory=RecordMeta)

    @classmethod
    def from_pair(cls, pair: FunctionPair, trajectory: Trajectory, spec: str = "", **meta: Any) -> "TrajectoryRecord":
        """Create a record carrying the pair's provenance keys"""
        provenance = {k: v for k, v in pair.meta.items() if v is not None}
        return cls(id=pair.id, spec=spec, trajectory=trajectory, meta=RecordMeta(**{**provenance, **meta}))

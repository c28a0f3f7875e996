"""User-facing program buffers.

Both implementations expose the same operations and must behave identically:
`ListBuffer` copies on splice, `PieceTableBuffer` keeps an original/add piece table so
appends and splices never move existing tokens.
"""

from collections.abc import Iterable, Iterator, Sequence
from enum import Enum
from typing import Protocol, overload

from revstream_core.models import Token


class BufferKind(str, Enum):
    LIST = "list"
    PIECE_TABLE = "piece_table"


class TokenBuffer(Protocol):
    def __len__(self) -> int: ...

    def __iter__(self) -> Iterator[Token]: ...

    def append(self, token: Token) -> None: ...

    def splice(self, start: int, end: int, tokens: Sequence[Token]) -> None: ...

    def tokens(self) -> tuple[Token, ...]: ...

    def token_at(self, index: int) -> Token: ...


class ListBuffer:
    def __init__(self, tokens: Iterable[Token] = ()) -> None:
        self._tokens: list[Token] = list(tokens)

    def __len__(self) -> int:
        return len(self._tokens)

    def __iter__(self) -> Iterator[Token]:
        return iter(self._tokens)

    def append(self, token: Token) -> None:
        self._tokens.append(token)

    def splice(self, start: int, end: int, tokens: Sequence[Token]) -> None:
        if not 0 <= start <= end <= len(self._tokens):
            raise IndexError(f"Splice window [{start}, {end}) out of bounds for {len(self._tokens)} tokens")
        self._tokens[start:end] = tokens

    def tokens(self) -> tuple[Token, ...]:
        return tuple(self._tokens)

    def token_at(self, index: int) -> Token:
        return self._tokens[index]


class Piece:
    __slots__ = ("length", "offset", "source")

    def __init__(self, source: str, offset: int, length: int) -> None:
        self.source, self.offset, self.length = source, offset, length

    def __repr__(self) -> str:
        return f"Piece<{self.source=} {self.offset=} {self.length=}>"


class PieceTableBuffer:
    def __init__(self, tokens: Iterable[Token] = ()) -> None:
        self._original: list[Token] = list(tokens)
        self._add: list[Token] = []
        self._table: list[Piece] = [Piece("original", 0, len(self._original))] if self._original else []
        self._length = len(self._original)

    def __len__(self) -> int:
        return self._length

    def __iter__(self) -> Iterator[Token]:
        for piece in self._table:
            source = self._add if piece.source == "add" else self._original
            yield from source[piece.offset : piece.offset + piece.length]

    def append(self, token: Token) -> None:
        add_offset = len(self._add)
        self._add.append(token)
        self._length += 1

        if self._table:
            last = self._table[-1]
            if last.source == "add" and last.offset + last.length == add_offset:
                last.length += 1
                return
        self._table.append(Piece("add", add_offset, 1))

    def splice(self, start: int, end: int, tokens: Sequence[Token]) -> None:
        if not 0 <= start <= end <= self._length:
            raise IndexError(f"Splice window [{start}, {end}) out of bounds for {self._length} tokens")

        inserted: list[Piece] = []
        if tokens:
            inserted.append(Piece("add", len(self._add), len(tokens)))
            self._add.extend(tokens)

        table: list[Piece] = []
        position = 0
        placed = False
        for piece in self._table:
            piece_start, piece_end = position, position + piece.length
            position = piece_end

            # Keep the part of the piece left of the window.
            if piece_start < start:
                table.append(Piece(piece.source, piece.offset, min(piece_end, start) - piece_start))
            if not placed and piece_end >= start:
                table.extend(inserted)
                placed = True
            # Keep the part of the piece right of the window.
            if piece_end > end:
                cut = max(end, piece_start)
                table.append(Piece(piece.source, piece.offset + cut - piece_start, piece_end - cut))

        if not placed:
            table.extend(inserted)

        self._table = [p for p in table if p.length > 0]
        self._length += len(tokens) - (end - start)

    def tokens(self) -> tuple[Token, ...]:
        return tuple(self)

    def token_at(self, index: int) -> Token:
        if index < 0:
            index += self._length
        if not 0 <= index < self._length:
            raise IndexError(f"Token index {index} out of range for {self._length} tokens")
        for piece in self._table:
            if index < piece.length:
                source = self._add if piece.source == "add" else self._original
                return source[piece.offset + index]
            index -= piece.length
        raise IndexError(index)


def make_buffer(kind: BufferKind = BufferKind.LIST, tokens: Iterable[Token] = ()) -> TokenBuffer:
    if kind is BufferKind.PIECE_TABLE:
        return PieceTableBuffer(tokens)
    return ListBuffer(tokens)


class BufferView(Sequence[Token]):
    """Read-only live view of a buffer. Nothing is copied; later edits show through."""

    __slots__ = ("_buffer",)

    def __init__(self, buffer: TokenBuffer) -> None:
        self._buffer = buffer

    def __len__(self) -> int:
        return len(self._buffer)

    def __iter__(self) -> Iterator[Token]:
        return iter(self._buffer)

    @overload
    def __getitem__(self, index: int) -> Token: ...

    @overload
    def __getitem__(self, index: slice) -> tuple[Token, ...]: ...

    def __getitem__(self, index: int | slice) -> Token | tuple[Token, ...]:
        if isinstance(index, slice):
            return self._buffer.tokens()[index]
        return self._buffer.token_at(index)

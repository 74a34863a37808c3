"""Tokenizer for .brasil agent scripts."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import LexError

KEYWORDS = {
    "class", "public", "private", "state", "effect", "float", "int", "void",
    "foreach", "const", "if", "else", "this", "Extent", "die", "spawn", "when",
}

# Longest operators first so the scanner is greedy.
_OPERATORS = [
    "#range", "<-", "<=", ">=", "==", "!=", "&&", "||",
    "{", "}", "(", ")", "[", "]", ";", ":", ",", ".",
    "<", ">", "=", "!", "+", "-", "*", "/",
]


@dataclass(frozen=True)
class ScriptSource:
    text: str
    origin: str = "<inline>"


@dataclass(frozen=True)
class Token:
    kind: str          # 'ident' | 'int' | 'float' | 'op' | keyword itself | 'eof'
    value: str
    line: int = field(compare=False, default=0)
    col: int = field(compare=False, default=0)

    def __repr__(self):
        return f"Token({self.kind!r}, {self.value!r}, {self.line}:{self.col})"


def tokenize(src: ScriptSource) -> list[Token]:
    """Token stream with positions; // and /* */ (incl. /** */) comments stripped."""
    text = src.text
    toks: list[Token] = []
    i, n = 0, len(text)
    line, col = 1, 1

    def advance(k: int):
        nonlocal i, line, col
        for _ in range(k):
            if text[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        c = text[i]
        if c in " \t\r\n":
            advance(1)
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                advance(1)
            continue
        if text.startswith("/*", i):
            start_line, start_col = line, col
            advance(2)
            while i < n and not text.startswith("*/", i):
                advance(1)
            if i >= n:
                raise LexError("unterminated comment", start_line, start_col)
            advance(2)
            continue
        if c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
            start_line, start_col = line, col
            j = i
            is_float = False
            while j < n and text[j].isdigit():
                j += 1
            if j < n and text[j] == ".":
                is_float = True
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    is_float = True
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            lit = text[i:j]
            toks.append(Token("float" if is_float else "int", lit, start_line, start_col))
            advance(j - i)
            continue
        if c.isalpha() or c == "_":
            start_line, start_col = line, col
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            kind = word if word in KEYWORDS else "ident"
            toks.append(Token(kind, word, start_line, start_col))
            advance(j - i)
            continue
        for op in _OPERATORS:
            if text.startswith(op, i):
                toks.append(Token("op", op, line, col))
                advance(len(op))
                break
        else:
            raise LexError(f"illegal character {c!r}", line, col)
    toks.append(Token("eof", "", line, col))
    return toks

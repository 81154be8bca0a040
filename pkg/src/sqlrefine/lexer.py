"""A small SQL tokenizer covering the SQLite query subset."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List, Optional

from .errors import ParseFailure

KEYWORDS = frozenset(
    """
    select distinct all from where group by having order asc desc limit offset
    union intersect except join inner cross left right full outer natural on
    using as and or not in like glob between exists is null with case when then
    else end escape collate recursive values
    """.split()
)

# Tokens: WORD, QIDENT, STRING, NUMBER, OP, LPAREN, RPAREN, COMMA, DOT, SEMI, EOF
_NUMBER = re.compile(r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")
_WORD = re.compile(r"[A-Za-z_][A-Za-z0-9_$]*")
_OPERATORS = ("<>", "!=", ">=", "<=", "==", "||", "=", "<", ">", "+", "-", "*", "/", "%")
_PUNCT = {"(": "LPAREN", ")": "RPAREN", ",": "COMMA", ".": "DOT", ";": "SEMI"}


@dataclass(frozen=True)
class Token:
    kind: str
    value: str
    pos: int

    def is_kw(self, *words: str) -> bool:
        return self.kind == "WORD" and self.value.lower() in words

    @property
    def keyword(self) -> Optional[str]:
        if self.kind == "WORD" and self.value.lower() in KEYWORDS:
            return self.value.lower()
        return None


def _read_quoted(text: str, start: int, close: str) -> tuple[str, int]:
    """Read a quoted run starting after ``text[start]``; doubled closers escape."""
    out = []
    i = start + 1
    while i < len(text):
        ch = text[i]
        if ch == close:
            if close != "]" and i + 1 < len(text) and text[i + 1] == close:
                out.append(close)
                i += 2
                continue
            return "".join(out), i + 1
        out.append(ch)
        i += 1
    raise ParseFailure("unterminated quoted token", start)


def tokenize(text: str) -> List[Token]:
    tokens: List[Token] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if text.startswith("--", i):
            j = text.find("\n", i)
            i = n if j < 0 else j + 1
            continue
        if text.startswith("/*", i):
            j = text.find("*/", i + 2)
            if j < 0:
                raise ParseFailure("unterminated comment", i)
            i = j + 2
            continue
        if ch == "'":
            value, end = _read_quoted(text, i, "'")
            tokens.append(Token("STRING", value, i))
            i = end
            continue
        if ch == '"':
            # Double-quoted text is read as a string literal (Spider convention).
            value, end = _read_quoted(text, i, '"')
            tokens.append(Token("STRING", value, i))
            i = end
            continue
        if ch == "`":
            value, end = _read_quoted(text, i, "`")
            tokens.append(Token("QIDENT", value, i))
            i = end
            continue
        if ch == "[":
            value, end = _read_quoted(text, i, "]")
            tokens.append(Token("QIDENT", value, i))
            i = end
            continue
        m = _NUMBER.match(text, i)
        if m and (ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit())):
            tokens.append(Token("NUMBER", m.group(), i))
            i = m.end()
            continue
        m = _WORD.match(text, i)
        if m:
            tokens.append(Token("WORD", m.group(), i))
            i = m.end()
            continue
        if ch in _PUNCT:
            tokens.append(Token(_PUNCT[ch], ch, i))
            i += 1
            continue
        for op in _OPERATORS:
            if text.startswith(op, i):
                tokens.append(Token("OP", op, i))
                i += len(op)
                break
        else:
            raise ParseFailure(f"unexpected character {ch!r}", i)
    tokens.append(Token("EOF", "", n))
    return tokens


def top_level_semicolon(text: str) -> int:
    """Offset of the first ``;`` outside quotes and comments, or -1.

    Unlike :func:`tokenize` this never raises; an unterminated quote simply
    swallows the rest of the text.
    """
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == ";":
            return i
        if text.startswith("--", i):
            j = text.find("\n", i)
            if j < 0:
                return -1
            i = j + 1
            continue
        if text.startswith("/*", i):
            j = text.find("*/", i + 2)
            if j < 0:
                return -1
            i = j + 2
            continue
        if ch in "'\"`[":
            close = "]" if ch == "[" else ch
            j = i + 1
            while j < n:
                if text[j] == close:
                    if close != "]" and j + 1 < n and text[j + 1] == close:
                        j += 2
                        continue
                    break
                j += 1
            if j >= n:
                return -1
            i = j + 1
            continue
        i += 1
    return -1


def strip_leading_comments(text: str) -> str:
    text = text.lstrip()
    while True:
        if text.startswith("--"):
            j = text.find("\n")
            text = "" if j < 0 else text[j + 1 :].lstrip()
        elif text.startswith("/*"):
            j = text.find("*/")
            text = "" if j < 0 else text[j + 2 :].lstrip()
        else:
            return text

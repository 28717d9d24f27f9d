from __future__ import annotations

import re
from dataclasses import dataclass

KEYWORDS = {"fn", "let", "if", "else", "while", "return", "true", "false", "null"}

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<float>\d+\.\d+(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+)
  | (?P<int>\d+)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>&&|\|\||==|!=|<=|>=|[-+*/%<>=!(){}\[\],;])
    """,
    re.VERBOSE,
)

_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


class MiniSyntaxError(SyntaxError):
    def __init__(self, message: str, file: str, line: int, col: int):
        super().__init__(f"{file}:{line}:{col}: {message}")
        self.file, self.line, self.col = file, line, col


@dataclass(frozen=True)
class Token:
    kind: str  # int, float, string, name, keyword, op, eof
    text: str
    line: int
    col: int


def _unescape(body: str, file: str, line: int, col: int) -> str:
    out, i = [], 0
    while i < len(body):
        ch = body[i]
        if ch == "\\":
            nxt = body[i + 1]
            if nxt not in _ESCAPES:
                raise MiniSyntaxError(f"unknown escape \\{nxt}", file, line, col + i)
            out.append(_ESCAPES[nxt])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def tokenize(source: str, file: str = "<input>") -> list[Token]:
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        col = pos - line_start + 1
        if not m:
            raise MiniSyntaxError(f"unexpected character {source[pos]!r}", file, line, col)
        kind = m.lastgroup
        text = m.group()
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "string":
            tokens.append(Token("string", _unescape(text[1:-1], file, line, col), line, col))
        elif kind == "name":
            tokens.append(Token("keyword" if text in KEYWORDS else "name", text, line, col))
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, text, line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens

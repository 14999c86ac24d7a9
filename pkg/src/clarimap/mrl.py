"""Parsing, linearization and masking for the NLMaps machine-readable language.

MRL expressions are nested functional terms over a small inventory of node
kinds, e.g.::

    query(area(keyval('name','Bradford')),nwr(keyval('amenity','pub')),qtype(latlong))

The grammar here is induced from corpus examples rather than a published
formal grammar: any known node kind may be applied to a parenthesized,
comma-separated argument list, quoted spans are opaque string literals, and
bare words that are not node kinds (``DIST_INTOWN``, ``1``) are unquoted
literals.  Quoted literals have no escape syntax; a quote always terminates
the literal.

The canonical form of an MRL string strips all whitespace outside quoted
literals and nothing else.  ``linearize(parse_mrl(s)) == canonicalize(s)``
holds for every well-formed ``s``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator

__all__ = [
    "MrlError",
    "EmptyInput",
    "UnbalancedParentheses",
    "UnknownNodeKind",
    "MalformedKeyval",
    "UnterminatedLiteral",
    "TrailingInput",
    "RootNotQuery",
    "MrlSyntaxError",
    "MrlAst",
    "MrlToken",
    "NODE_KINDS",
    "LOC_PLACEHOLDER",
    "POI_PLACEHOLDER",
    "parse_mrl",
    "linearize",
    "canonicalize",
    "tokenize_mrl",
    "content_tokens",
    "extract_keyvals",
    "keyval_spans",
    "mask_pair",
]


class MrlError(ValueError):
    """Base class for malformed MRL input."""


class EmptyInput(MrlError):
    pass


class UnbalancedParentheses(MrlError):
    pass


class UnknownNodeKind(MrlError):
    pass


class MalformedKeyval(MrlError):
    pass


class UnterminatedLiteral(MrlError):
    pass


class TrailingInput(MrlError):
    pass


class RootNotQuery(MrlError):
    pass


class MrlSyntaxError(MrlError):
    pass


#: Node kinds observed in the corpus.  ``literal`` is the leaf kind and is
#: never written with parentheses.
NODE_KINDS = frozenset(
    {
        "query",
        "area",
        "nwr",
        "keyval",
        "qtype",
        "around",
        "center",
        "search",
        "maxdist",
        "topx",
        "least",
        "findkey",
        "count",
        "latlong",
        "literal",
    }
)

_STRUCTURAL_CHARS = "(),'"

LOC_PLACEHOLDER = "<LOC>"
POI_PLACEHOLDER = "<POI>"


@dataclass(frozen=True)
class MrlAst:
    """Immutable tree node of a parsed MRL expression.

    ``text`` is only meaningful for ``literal`` nodes; ``quoted`` records
    whether the literal was written in single quotes so linearization can
    reproduce the original surface form.
    """

    kind: str
    children: tuple["MrlAst", ...] = ()
    text: str = ""
    quoted: bool = False

    def __post_init__(self) -> None:
        if self.kind == "literal":
            if self.children:
                raise ValueError("literal nodes cannot have children")
        elif self.text:
            raise ValueError(f"non-literal node {self.kind!r} cannot carry text")

    @property
    def is_literal(self) -> bool:
        return self.kind == "literal"

    def walk(self) -> Iterator["MrlAst"]:
        """Pre-order traversal."""
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass(frozen=True)
class MrlToken:
    """One token of a linearized MRL string.

    Structural tokens are the single-character delimiters (parentheses,
    commas, quotes) and whitespace runs; everything else, including a whole
    quoted span, is a content token.  Token spans partition the input.
    """

    text: str
    start: int
    end: int
    is_structural: bool

    @property
    def span(self) -> tuple[int, int]:
        return (self.start, self.end)


def tokenize_mrl(text: str) -> list[MrlToken]:
    """Split ``text`` on the structural alphabet ``( ) , '`` and whitespace.

    A quoted span is one content token even when it contains spaces or
    delimiter characters.  Concatenating the token texts in order reproduces
    the input exactly.
    """
    tokens: list[MrlToken] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "'":
            tokens.append(MrlToken("'", i, i + 1, True))
            close = text.find("'", i + 1)
            if close == -1:
                if i + 1 < n:
                    tokens.append(MrlToken(text[i + 1 :], i + 1, n, False))
                i = n
            else:
                if close > i + 1:
                    tokens.append(MrlToken(text[i + 1 : close], i + 1, close, False))
                tokens.append(MrlToken("'", close, close + 1, True))
                i = close + 1
        elif ch in "(),":
            tokens.append(MrlToken(ch, i, i + 1, True))
            i += 1
        elif ch.isspace():
            j = i + 1
            while j < n and text[j].isspace():
                j += 1
            tokens.append(MrlToken(text[i:j], i, j, True))
            i = j
        else:
            j = i + 1
            while j < n and text[j] not in _STRUCTURAL_CHARS and not text[j].isspace():
                j += 1
            tokens.append(MrlToken(text[i:j], i, j, False))
            i = j
    return tokens


def content_tokens(text: str) -> list[MrlToken]:
    """Non-structural tokens of ``text``, in order."""
    return [t for t in tokenize_mrl(text) if not t.is_structural]


def canonicalize(text: str) -> str:
    """Strip all whitespace outside quoted literals."""
    out: list[str] = []
    in_quote = False
    for ch in text:
        if ch == "'":
            in_quote = not in_quote
            out.append(ch)
        elif in_quote or not ch.isspace():
            out.append(ch)
    return "".join(out)


class _TokenCursor:
    def __init__(self, tokens: list[MrlToken]):
        self._tokens = [t for t in tokens if not (t.is_structural and t.text[0].isspace())]
        self._pos = 0

    def peek(self) -> MrlToken | None:
        if self._pos < len(self._tokens):
            return self._tokens[self._pos]
        return None

    def next(self) -> MrlToken | None:
        tok = self.peek()
        if tok is not None:
            self._pos += 1
        return tok

    @property
    def exhausted(self) -> bool:
        return self._pos >= len(self._tokens)


def parse_mrl(text: str, extra_kinds: Iterable[str] = ()) -> MrlAst:
    """Parse a linearized MRL string into an :class:`MrlAst`.

    ``extra_kinds`` extends the node-kind inventory for corpora that use
    operators beyond the built-in set.
    """
    if not text or not text.strip():
        raise EmptyInput("cannot parse an empty MRL string")
    kinds = NODE_KINDS | set(extra_kinds)
    callable_kinds = kinds - {"literal"}
    cursor = _TokenCursor(tokenize_mrl(text))
    root = _parse_expr(cursor, callable_kinds)
    leftover = cursor.peek()
    if leftover is not None:
        if leftover.text == ")":
            raise UnbalancedParentheses(f"unmatched ')' at offset {leftover.start}")
        raise TrailingInput(f"unexpected trailing input at offset {leftover.start}: {leftover.text!r}")
    if root.kind != "query":
        raise RootNotQuery(f"MRL root must be 'query', got {root.kind!r}")
    return root


def _parse_expr(cursor: _TokenCursor, callable_kinds: frozenset[str] | set[str]) -> MrlAst:
    tok = cursor.next()
    if tok is None:
        raise UnbalancedParentheses("unexpected end of input")
    if tok.is_structural:
        if tok.text == "'":
            return _parse_quoted(cursor, tok)
        if tok.text == ")":
            raise UnbalancedParentheses(f"unexpected ')' at offset {tok.start}")
        raise MrlSyntaxError(f"unexpected {tok.text!r} at offset {tok.start}")
    name = tok.text
    nxt = cursor.peek()
    if nxt is not None and nxt.is_structural and nxt.text == "(":
        if name not in callable_kinds:
            raise UnknownNodeKind(f"unknown node kind {name!r} at offset {tok.start}")
        cursor.next()
        children = [_parse_expr(cursor, callable_kinds)]
        while True:
            sep = cursor.next()
            if sep is None:
                raise UnbalancedParentheses(f"missing ')' for {name!r} opened at offset {tok.start}")
            if sep.is_structural and sep.text == ",":
                children.append(_parse_expr(cursor, callable_kinds))
            elif sep.is_structural and sep.text == ")":
                break
            else:
                raise MrlSyntaxError(f"expected ',' or ')' at offset {sep.start}, got {sep.text!r}")
        node = MrlAst(name, tuple(children))
        if name == "keyval":
            if len(children) != 2 or not all(c.is_literal for c in children):
                raise MalformedKeyval(f"keyval at offset {tok.start} must have exactly two literal arguments")
        return node
    if name in callable_kinds:
        return MrlAst(name)
    return MrlAst("literal", text=name, quoted=False)


def _parse_quoted(cursor: _TokenCursor, open_tok: MrlToken) -> MrlAst:
    nxt = cursor.next()
    if nxt is None:
        raise UnterminatedLiteral(f"unterminated quote at offset {open_tok.start}")
    if nxt.is_structural and nxt.text == "'":
        return MrlAst("literal", text="", quoted=True)
    if nxt.is_structural:
        raise UnterminatedLiteral(f"unterminated quote at offset {open_tok.start}")
    close = cursor.next()
    if close is None or not (close.is_structural and close.text == "'"):
        raise UnterminatedLiteral(f"unterminated quote at offset {open_tok.start}")
    return MrlAst("literal", text=nxt.text, quoted=True)


def linearize(ast: MrlAst) -> str:
    """Deterministic canonical string for ``ast``; no whitespace outside quotes."""
    if ast.is_literal:
        return f"'{ast.text}'" if ast.quoted else ast.text
    if ast.children:
        return ast.kind + "(" + ",".join(linearize(c) for c in ast.children) + ")"
    return ast.kind


def extract_keyvals(ast: MrlAst) -> list[tuple[str, str]]:
    """All (key, value) pairs of ``keyval`` nodes, in pre-order."""
    pairs: list[tuple[str, str]] = []
    for node in ast.walk():
        if node.kind == "keyval" and len(node.children) >= 2:
            pairs.append((node.children[0].text, node.children[1].text))
    return pairs


def keyval_spans(text: str) -> list[dict]:
    """Key/value pairs of a canonical MRL string with character spans.

    Scans the token stream for ``keyval ( <key> , <value> )`` patterns and
    returns one dict per pair: ``{key, value, key_span, value_span}``.  Spans
    cover the content token only (quotes excluded).  Used by the annotation
    service to map key-value rows back onto hypothesis characters.
    """
    toks = tokenize_mrl(text)
    rows: list[dict] = []
    i = 0
    while i < len(toks):
        tok = toks[i]
        if not tok.is_structural and tok.text == "keyval":
            args: list[MrlToken] = []
            j = i + 1
            if j < len(toks) and toks[j].text == "(":
                j += 1
                depth = 1
                while j < len(toks) and depth > 0:
                    t = toks[j]
                    if t.is_structural and t.text == "(":
                        depth += 1
                    elif t.is_structural and t.text == ")":
                        depth -= 1
                    elif not t.is_structural and depth == 1:
                        args.append(t)
                    j += 1
            if len(args) == 2:
                rows.append(
                    {
                        "key": args[0].text,
                        "value": args[1].text,
                        "key_span": args[0].span,
                        "value_span": args[1].span,
                    }
                )
            i = j
        else:
            i += 1
    return rows


def _edit_distance(a: str, b: str, cap: int = 3) -> int:
    if abs(len(a) - len(b)) > cap:
        return cap + 1
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def _common_prefix_len(a: str, b: str) -> int:
    n = 0
    for ca, cb in zip(a, b):
        if ca != cb:
            break
        n += 1
    return n


def _surface_match(candidate: str, value: str) -> bool:
    if candidate == value:
        return True
    need = min(3, len(candidate), len(value))
    return _common_prefix_len(candidate, value) >= need and _edit_distance(candidate, value) <= 2


def _mask_ast(node: MrlAst, under_place: bool) -> tuple[MrlAst, list[tuple[str, str]]]:
    """Replace maskable keyval values; returns new node + (value, placeholder) list."""
    if node.kind == "keyval" and len(node.children) >= 2:
        key = node.children[0].text
        value_node = node.children[1]
        placeholder: str | None = None
        if key == "name":
            if under_place:
                placeholder = LOC_PLACEHOLDER
        else:
            placeholder = POI_PLACEHOLDER
        if placeholder is not None and value_node.text != placeholder:
            masked_value = replace(value_node, text=placeholder)
            new_node = MrlAst(node.kind, (node.children[0], masked_value) + node.children[2:])
            return new_node, [(value_node.text, placeholder)]
        if placeholder is not None:
            return node, []
        return node, []
    child_flag = under_place or node.kind in ("area", "center")
    new_children = []
    replaced: list[tuple[str, str]] = []
    for child in node.children:
        new_child, reps = _mask_ast(child, child_flag)
        new_children.append(new_child)
        replaced.extend(reps)
    return MrlAst(node.kind, tuple(new_children), node.text, node.quoted), replaced


def _mask_question(question: str, replacements: list[tuple[str, str]]) -> str:
    words = [w if w in (LOC_PLACEHOLDER, POI_PLACEHOLDER) else w.lower() for w in question.split()]
    # Longest surface forms first so multi-word names are not shadowed.
    ordered = sorted(
        replacements,
        key=lambda r: (-len(r[0].replace("_", " ").split()), -len(r[0])),
    )
    for value, placeholder in ordered:
        value_words = value.lower().replace("_", " ").split()
        n = len(value_words)
        if n == 0:
            continue
        target = " ".join(value_words)
        for i in range(0, len(words) - n + 1):
            window = words[i : i + n]
            if any(w in (LOC_PLACEHOLDER, POI_PLACEHOLDER) for w in window):
                continue
            if _surface_match(" ".join(window), target):
                words[i : i + n] = [placeholder]
                break
    return " ".join(words)


def mask_pair(question: str, ast: MrlAst) -> tuple[str, MrlAst]:
    """Mask location and POI surface forms in a (question, parse) pair.

    In the AST, values of ``keyval('name', V)`` nodes below ``area`` or
    ``center`` become ``<LOC>`` and values of all other keyvals become
    ``<POI>``.  In the lowercased question, the surface form matching each
    masked value (exact, or shared-prefix with edit distance <= 2 over word
    spans, underscores read as spaces) is replaced by the same placeholder.
    Values with no surface match are masked in the AST only.  Masking is
    idempotent.
    """
    masked_ast, replaced = _mask_ast(ast, under_place=False)
    masked_question = _mask_question(question, replaced)
    return masked_question, masked_ast

"""Rule AST for token patterns.

The grammar has two levels. Pattern level: a hole, a bracketed token
constraint, concatenation, alternation, or a quantified sub-pattern.
Constraint level (inside brackets): a hole, the wildcard, a field=value
test, negation, conjunction, or disjunction.

A pattern is *complete* when it contains no hole at either level. During
synthesis the leftmost hole is expanded one grammar step at a time; the
expansion order here is fixed and total so search traces are reproducible.

Surface syntax, as printed and parsed:

    [entity=person] [word=son] [entity=person]
    [tag=dt] [word=dog] ([lemma=bark]|[lemma=run])
    [word=and]?    []*    [!word=x]    [word=a & tag=nn]    HOLE

Holes print as the token HOLE at both levels. Values that are not plain
lowercase identifiers are double-quoted.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import TYPE_CHECKING

from .corpus import FIELDS, Specification
from .errors import RuleforgeError

if TYPE_CHECKING:  # pragma: no cover
    from .scoring import CostTable


class PatternError(RuleforgeError):
    """Structurally invalid pattern or illegal pattern operation."""


class PatternSyntaxError(PatternError):
    """Parse failure; carries the character offset of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class ExpansionError(PatternError):
    """Raised when asked to expand a pattern that has no hole."""


class _TreeMixin:
    """Hashing and equality that survive very deep trees.

    Long searches build heavily right-nested chains, so the generated
    recursive dataclass __eq__/__hash__ would overflow the stack; instead
    each node carries a lazily computed structural hash and equality walks
    an explicit stack. Hashes combine bottom-up in one pass per tree.
    """

    __slots__ = ("_h",)

    def __hash__(self) -> int:
        try:
            return self._h
        except AttributeError:
            return _fill_hashes(self)

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, _TreeMixin):
            return NotImplemented
        if type(self) is not type(other) or hash(self) != hash(other):
            return False
        stack = [(self, other)]
        while stack:
            a, b = stack.pop()
            if a is b:
                continue
            if type(a) is not type(b) or hash(a) != hash(b) or _scalars(a) != _scalars(b):
                return False
            stack.extend(zip(children(a), children(b)))
        return True

    def __ne__(self, other):
        result = self.__eq__(other)
        return result if result is NotImplemented else not result


class ConstraintNode(_TreeMixin):
    __slots__ = ()


class PatternNode(_TreeMixin):
    __slots__ = ()


@dataclass(frozen=True, slots=True, eq=False)
class ConstraintHole(ConstraintNode):
    pass


@dataclass(frozen=True, slots=True, eq=False)
class Wildcard(ConstraintNode):
    pass


@dataclass(frozen=True, slots=True, eq=False)
class FieldIs(ConstraintNode):
    field: str
    value: str

    def __post_init__(self) -> None:
        if self.field not in FIELDS:
            raise PatternError(f"unknown field '{self.field}'")
        if not self.value:
            raise PatternError("constraint value must be non-empty")
        object.__setattr__(self, "value", self.value.lower())


@dataclass(frozen=True, slots=True, eq=False)
class Not(ConstraintNode):
    child: ConstraintNode


@dataclass(frozen=True, slots=True, eq=False)
class And(ConstraintNode):
    left: ConstraintNode
    right: ConstraintNode


@dataclass(frozen=True, slots=True, eq=False)
class Or(ConstraintNode):
    left: ConstraintNode
    right: ConstraintNode


@dataclass(frozen=True, slots=True, eq=False)
class Hole(PatternNode):
    pass


@dataclass(frozen=True, slots=True, eq=False)
class TokenPattern(PatternNode):
    constraint: ConstraintNode


QUANTIFIERS = ("?", "*", "+")


@dataclass(frozen=True, slots=True, eq=False)
class Quantified(PatternNode):
    child: PatternNode
    quant: str

    def __post_init__(self) -> None:
        if self.quant not in QUANTIFIERS:
            raise PatternError(f"unknown quantifier '{self.quant}'")
        if isinstance(self.child, Quantified):
            raise PatternError("stacked quantifiers are not allowed")


@dataclass(frozen=True, slots=True, eq=False)
class Concat(PatternNode):
    left: PatternNode
    right: PatternNode


@dataclass(frozen=True, slots=True, eq=False)
class Alternation(PatternNode):
    left: PatternNode
    right: PatternNode


def _scalars(node) -> tuple:
    if isinstance(node, FieldIs):
        return (node.field, node.value)
    if isinstance(node, Quantified):
        return (node.quant,)
    return ()


_INTERN: dict = {}


def intern_node(node: "Node") -> "Node":
    """Hash-consing: one canonical object per structurally distinct tree.

    Construction helpers intern bottom-up, so equality checks between
    interned trees short-circuit on identity almost immediately. Purely an
    optimization; structural equality works regardless.
    """
    cached = _INTERN.get(node)
    if cached is not None:
        return cached
    if len(_INTERN) > (1 << 20):
        _INTERN.clear()
    _INTERN[node] = node
    return node


def _fill_hashes(root) -> int:
    stack = [root]
    while stack:
        node = stack[-1]
        try:
            object.__getattribute__(node, "_h")
            stack.pop()
            continue
        except AttributeError:
            pass
        pending = []
        for child in children(node):
            try:
                object.__getattribute__(child, "_h")
            except AttributeError:
                pending.append(child)
        if pending:
            stack.extend(pending)
            continue
        payload = (type(node).__name__,) + _scalars(node) + tuple(c._h for c in children(node))
        object.__setattr__(node, "_h", hash(payload))
        stack.pop()
    return root._h


Node = PatternNode | ConstraintNode

# ---------------------------------------------------------------------------
# Tree access. Child paths are tuples of child indices; pattern-level and
# constraint-level nodes share one pre-order numbering, so the path into
# a TokenPattern's constraint goes through child index 0.
# ---------------------------------------------------------------------------


def children(node: Node) -> tuple[Node, ...]:
    if isinstance(node, (Concat, Alternation, And, Or)):
        return (node.left, node.right)
    if isinstance(node, Quantified):
        return (node.child,)
    if isinstance(node, TokenPattern):
        return (node.constraint,)
    if isinstance(node, Not):
        return (node.child,)
    return ()


def _rebuild(node: Node, parts: list) -> Node:
    if isinstance(node, (Concat, Alternation, And, Or)):
        return intern_node(type(node)(parts[0], parts[1]))
    if isinstance(node, Quantified):
        return intern_node(Quantified(parts[0], node.quant))
    if isinstance(node, TokenPattern):
        return intern_node(TokenPattern(parts[0]))
    if isinstance(node, Not):
        return intern_node(Not(parts[0]))
    raise PatternError(f"node {node!r} has no children")


def node_at(root: Node, path: tuple[int, ...]) -> Node:
    node = root
    for index in path:
        node = children(node)[index]
    return node


def replace_at(root: Node, path: tuple[int, ...], replacement: Node) -> Node:
    if not path:
        return intern_node(replacement)
    parts = list(children(root))
    parts[path[0]] = replace_at(parts[path[0]], path[1:], replacement)
    return _rebuild(root, parts)


def iter_nodes(root: Node):
    stack = [root]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def leftmost_hole(root: Node) -> tuple[int, ...] | None:
    """Path to the first hole in pre-order, or None for a complete pattern."""
    if isinstance(root, (Hole, ConstraintHole)):
        return ()
    for index, child in enumerate(children(root)):
        sub = leftmost_hole(child)
        if sub is not None:
            return (index,) + sub
    return None


@lru_cache(maxsize=1 << 17)
def is_complete(root: Node) -> bool:
    return not any(isinstance(n, (Hole, ConstraintHole)) for n in iter_nodes(root))


def count_holes(root: Node) -> int:
    return sum(1 for n in iter_nodes(root) if isinstance(n, (Hole, ConstraintHole)))


def node_count(root: Node) -> int:
    """Number of AST nodes, holes excluded. Every expansion step introduces
    exactly one node, so for a complete rule this equals the length of its
    shortest derivation."""
    return sum(1 for n in iter_nodes(root) if not isinstance(n, (Hole, ConstraintHole)))


def token_pattern_count(root: Node) -> int:
    return sum(1 for n in iter_nodes(root) if isinstance(n, TokenPattern))


def flatten_concat(root: PatternNode) -> list[PatternNode]:
    if isinstance(root, Concat):
        return flatten_concat(root.left) + flatten_concat(root.right)
    return [root]


def concat_chain(parts) -> PatternNode:
    parts = list(parts)
    if not parts:
        raise PatternError("cannot build an empty concatenation")
    chain = parts[-1]
    for part in reversed(parts[:-1]):
        chain = intern_node(Concat(part, chain))
    return chain


def _flatten_binary(root: Node) -> list[Node]:
    cls = type(root)
    left, right = children(root)
    parts = []
    for side in (left, right):
        if type(side) is cls:
            parts.extend(_flatten_binary(side))
        else:
            parts.append(side)
    return parts


def canonicalize(root: Node) -> Node:
    """Re-associate nested chains of the same binary operator to the right.

    Printing flattens such chains to n-ary surface form, so the parser can
    only restore one association; this is it.
    """
    if isinstance(root, (Concat, Alternation, And, Or)):
        parts = [canonicalize(p) for p in _flatten_binary(root)]
        chain = parts[-1]
        for part in reversed(parts[:-1]):
            chain = intern_node(type(root)(part, chain))
        return chain
    if isinstance(root, Quantified):
        return intern_node(Quantified(canonicalize(root.child), root.quant))
    if isinstance(root, TokenPattern):
        return intern_node(TokenPattern(canonicalize(root.constraint)))
    if isinstance(root, Not):
        return intern_node(Not(canonicalize(root.child)))
    return intern_node(root)


# ---------------------------------------------------------------------------
# Search states and hole expansion.
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class State:
    """A point in the search: a (possibly holed) pattern plus bookkeeping.

    static_cost is always the pattern's cost under the table that was active
    when the state was created; depth counts expansion steps from the root.
    """

    pattern: PatternNode
    static_cost: float
    depth: int = 0

    @staticmethod
    def initial(costs: "CostTable | None" = None) -> "State":
        from .scoring import static_cost

        hole = Hole()
        return State(hole, static_cost(hole, costs), 0)


@lru_cache(maxsize=64)
def spec_vocabulary(spec: Specification) -> tuple[tuple[str, str], ...]:
    """(field, value) pairs observed in highlighted tokens.

    Ordered by field (word, lemma, tag, entity) and within a field by first
    occurrence over entries and token positions, so expansion order is total
    and reproducible for a fixed specification.
    """
    values: dict[str, list[str]] = {f: [] for f in FIELDS}
    seen: dict[str, set[str]] = {f: set() for f in FIELDS}
    for entry in spec.entries:
        for span in entry.ordered_selections:
            for i in range(span.start, span.end):
                token = entry.sentence.tokens[i]
                for field in FIELDS:
                    value = token.get(field)
                    if value not in seen[field]:
                        seen[field].add(value)
                        values[field].append(value)
    return tuple((field, value) for field in FIELDS for value in values[field])


def expansions(state: State, spec: Specification, costs: "CostTable | None" = None) -> list[State]:
    """All single-step expansions of the leftmost hole, in fixed order.

    Pattern-level holes expand to concatenation, a bracketed constraint,
    alternation, then the three quantifiers; constraint-level holes expand
    to the wildcard, every (field, value) pair from the specification's
    highlight vocabulary, then negation, conjunction, and disjunction.
    Quantifiers never stack and negation never nests directly.
    """
    from .scoring import static_cost

    path = leftmost_hole(state.pattern)
    if path is None:
        raise ExpansionError("no hole to expand")
    hole = node_at(state.pattern, path)
    parent = node_at(state.pattern, path[:-1]) if path else None

    fragments: list[Node] = []
    if isinstance(hole, Hole):
        fragments.append(intern_node(Concat(Hole(), Hole())))
        fragments.append(intern_node(TokenPattern(ConstraintHole())))
        fragments.append(intern_node(Alternation(Hole(), Hole())))
        if not isinstance(parent, Quantified):
            fragments.extend(intern_node(Quantified(Hole(), q)) for q in QUANTIFIERS)
    else:
        fragments.append(intern_node(Wildcard()))
        fragments.extend(intern_node(FieldIs(f, v)) for f, v in spec_vocabulary(spec))
        if not isinstance(parent, Not):
            fragments.append(intern_node(Not(ConstraintHole())))
        fragments.append(intern_node(And(ConstraintHole(), ConstraintHole())))
        fragments.append(intern_node(Or(ConstraintHole(), ConstraintHole())))

    # the cost tables are additive over nodes, so each child's cost is the
    # parent's cost with the hole swapped for the fragment
    base = state.static_cost - static_cost(hole, costs)
    out = []
    for fragment in fragments:
        pattern = replace_at(state.pattern, path, fragment)
        out.append(State(pattern, base + static_cost(fragment, costs), state.depth + 1))
    return out


# ---------------------------------------------------------------------------
# Printer.
# ---------------------------------------------------------------------------

_BARE_VALUE = re.compile(r"[a-z0-9_.\-]+\Z")

# pattern-level precedence: alternation < concatenation < quantification
_P_ALT, _P_CONCAT, _P_QUANT, _P_ATOM = 0, 1, 2, 3
# constraint-level precedence: or < and < not
_C_OR, _C_AND, _C_NOT, _C_ATOM = 0, 1, 2, 3


def _quote(value: str) -> str:
    if _BARE_VALUE.match(value):
        return value
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _render_constraint(node: ConstraintNode, parent_prec: int) -> str:
    if isinstance(node, ConstraintHole):
        return "HOLE"
    if isinstance(node, Wildcard):
        return "*"
    if isinstance(node, FieldIs):
        return f"{node.field}={_quote(node.value)}"
    if isinstance(node, Not):
        text, prec = "!" + _render_constraint(node.child, _C_NOT), _C_NOT
    elif isinstance(node, And):
        text = " & ".join(_render_constraint(p, _C_AND) for p in _flatten_binary(node))
        prec = _C_AND
    elif isinstance(node, Or):
        text = " | ".join(_render_constraint(p, _C_OR) for p in _flatten_binary(node))
        prec = _C_OR
    else:
        raise PatternError(f"cannot print constraint {node!r}")
    return f"({text})" if prec < parent_prec else text


def _render_pattern(node: PatternNode, parent_prec: int) -> str:
    if isinstance(node, Hole):
        return "HOLE"
    if isinstance(node, TokenPattern):
        if isinstance(node.constraint, Wildcard):
            return "[]"
        return "[" + _render_constraint(node.constraint, _C_OR) + "]"
    if isinstance(node, Quantified):
        text, prec = _render_pattern(node.child, _P_ATOM) + node.quant, _P_QUANT
    elif isinstance(node, Concat):
        text = " ".join(_render_pattern(p, _P_QUANT) for p in _flatten_binary(node))
        prec = _P_CONCAT
    elif isinstance(node, Alternation):
        text = "|".join(_render_pattern(p, _P_CONCAT) for p in _flatten_binary(node))
        prec = _P_ALT
    else:
        raise PatternError(f"cannot print pattern {node!r}")
    return f"({text})" if prec < parent_prec else text


def print_pattern(pattern: PatternNode) -> str:
    """Render a pattern in the surface syntax.

    Nested chains of concatenation and alternation flatten to n-ary form,
    so parse(print_pattern(p)) equals canonicalize(p).
    """
    return _render_pattern(pattern, _P_ALT)


def linearize_ast(pattern: Node) -> tuple[str, ...]:
    """Deterministic pre-order symbol stream used by learned scorers.

    Structurally equal patterns linearize identically; holes at either
    level emit the literal HOLE symbol.
    """
    out: list[str] = []

    def walk(node: Node) -> None:
        if isinstance(node, (Hole, ConstraintHole)):
            out.append("HOLE")
        elif isinstance(node, TokenPattern):
            out.append("TOKEN")
            walk(node.constraint)
        elif isinstance(node, Concat):
            out.append("CONCAT")
            walk(node.left)
            walk(node.right)
        elif isinstance(node, Alternation):
            out.append("ALT")
            walk(node.left)
            walk(node.right)
        elif isinstance(node, Quantified):
            out.append(f"QUANT={node.quant}")
            walk(node.child)
        elif isinstance(node, Wildcard):
            out.append("WILDCARD")
        elif isinstance(node, FieldIs):
            out.append(f"FIELD={node.field}")
            out.append(f"VAL={node.value}")
        elif isinstance(node, Not):
            out.append("NOT")
            walk(node.child)
        elif isinstance(node, And):
            out.append("AND")
            walk(node.left)
            walk(node.right)
        elif isinstance(node, Or):
            out.append("OR")
            walk(node.left)
            walk(node.right)
        else:  # pragma: no cover
            raise PatternError(f"cannot linearize {node!r}")

    walk(pattern)
    return tuple(out)


# ---------------------------------------------------------------------------
# Parser: recursive descent over a small token stream.
# ---------------------------------------------------------------------------

_PUNCT = set("[]()|?*+&!=")
_WORD_RE = re.compile(r"[^\s\[\]()|?*+&!=\"]+")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens: list[tuple[str, str, int]] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in _PUNCT:
            tokens.append((ch, ch, i))
            i += 1
            continue
        if ch == '"':
            j = i + 1
            buf: list[str] = []
            while j < len(text) and text[j] != '"':
                if text[j] == "\\" and j + 1 < len(text):
                    buf.append(text[j + 1])
                    j += 2
                else:
                    buf.append(text[j])
                    j += 1
            if j >= len(text):
                raise PatternSyntaxError("unterminated quoted value", i)
            tokens.append(("VALUE", "".join(buf), i))
            i = j + 1
            continue
        match = _WORD_RE.match(text, i)
        if not match:  # pragma: no cover
            raise PatternSyntaxError(f"unexpected character '{ch}'", i)
        tokens.append(("WORD", match.group(0), i))
        i = match.end()
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> tuple[str, str, int] | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> tuple[str, str, int]:
        token = self.peek()
        if token is None:
            raise PatternSyntaxError("unexpected end of input", len(self.text))
        self.pos += 1
        return token

    def expect(self, kind: str) -> tuple[str, str, int]:
        token = self.peek()
        if token is None or token[0] != kind:
            offset = token[2] if token else len(self.text)
            raise PatternSyntaxError(f"expected '{kind}'", offset)
        return self.take()

    # pattern level -----------------------------------------------------

    def pattern(self) -> PatternNode:
        parts = [self.concatenation()]
        while (token := self.peek()) and token[0] == "|":
            self.take()
            parts.append(self.concatenation())
        return self._fold(Alternation, parts)

    def concatenation(self) -> PatternNode:
        parts = [self.quantified()]
        while (token := self.peek()) and token[0] in ("[", "(", "WORD"):
            parts.append(self.quantified())
        return self._fold(Concat, parts)

    def quantified(self) -> PatternNode:
        node = self.primary()
        token = self.peek()
        if token and token[0] in QUANTIFIERS:
            _, quant, offset = self.take()
            try:
                node = intern_node(Quantified(node, quant))
            except PatternError as exc:
                raise PatternSyntaxError(str(exc), offset) from exc
        return node

    def primary(self) -> PatternNode:
        token = self.take()
        kind, value, offset = token
        if kind == "(":
            node = self.pattern()
            self.expect(")")
            return node
        if kind == "[":
            nxt = self.peek()
            if nxt and nxt[0] == "]":
                self.take()
                return intern_node(TokenPattern(Wildcard()))
            constraint = self.constraint_or()
            self.expect("]")
            return intern_node(TokenPattern(constraint))
        if kind == "WORD" and value == "HOLE":
            return intern_node(Hole())
        raise PatternSyntaxError(f"unexpected token '{value}'", offset)

    # constraint level ----------------------------------------------------

    def constraint_or(self) -> ConstraintNode:
        parts = [self.constraint_and()]
        while (token := self.peek()) and token[0] == "|":
            self.take()
            parts.append(self.constraint_and())
        return self._fold(Or, parts)

    def constraint_and(self) -> ConstraintNode:
        parts = [self.constraint_unary()]
        while (token := self.peek()) and token[0] == "&":
            self.take()
            parts.append(self.constraint_unary())
        return self._fold(And, parts)

    def constraint_unary(self) -> ConstraintNode:
        token = self.take()
        kind, value, offset = token
        if kind == "!":
            return intern_node(Not(self.constraint_unary()))
        if kind == "(":
            node = self.constraint_or()
            self.expect(")")
            return node
        if kind == "*":
            return intern_node(Wildcard())
        if kind == "WORD" and value == "HOLE":
            return intern_node(ConstraintHole())
        if kind == "WORD":
            if value not in FIELDS:
                raise PatternSyntaxError(f"unknown field '{value}'", offset)
            self.expect("=")
            vkind, vvalue, voffset = self.take()
            if vkind not in ("WORD", "VALUE"):
                raise PatternSyntaxError("expected a constraint value", voffset)
            return intern_node(FieldIs(value, vvalue.lower()))
        raise PatternSyntaxError(f"unexpected token '{value}'", offset)

    @staticmethod
    def _fold(cls, parts):
        chain = parts[-1]
        for part in reversed(parts[:-1]):
            chain = intern_node(cls(part, chain))
        return chain


def parse_pattern(text: str) -> PatternNode:
    """Parse the surface syntax; raises PatternSyntaxError with an offset."""
    parser = _Parser(text)
    node = parser.pattern()
    leftover = parser.peek()
    if leftover is not None:
        raise PatternSyntaxError(f"unexpected token '{leftover[1]}'", leftover[2])
    return intern_node(node)

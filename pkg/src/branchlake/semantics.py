"""Glut-tolerant result semantics over per-branch answers.

Each branch is a consistent classical model; a sentence counts as true
(false) for the whole catalog when some branch makes it true (false). A
sentence can therefore be both, which is reported as a glut rather than a
contradiction: the whole sentence is evaluated inside each branch, so the
existential never distributes through connectives and classical absurdities
stay unsatisfiable.

Numbers are summarized per branch, booleans collapse to a three-valued
verdict, and id lists are compared git-diff style (consensus + per-branch
exclusives).
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass

from .errors import DuplicateId, EmptyBranchSet, SentenceParseError, UnknownKpi


class Verdict(enum.Enum):
    DEFINITELY_TRUE = "definitely_true"
    DEFINITELY_FALSE = "definitely_false"
    GLUT = "glut"


@dataclass(frozen=True)
class NumberSummary:
    per_branch: dict[str, float]
    min: float
    max: float
    mean: float
    unanimous: bool


@dataclass(frozen=True)
class ListDiff:
    per_branch: dict[str, list[int]]
    consensus: list[int]
    exclusive: dict[str, list[int]]


def classify_bools(per_branch: dict[str, bool]) -> Verdict:
    """Three-valued collapse: all-true, all-false, or disagreement."""
    if not per_branch:
        raise EmptyBranchSet("no branches to classify")
    values = set(per_branch.values())
    if values == {True}:
        return Verdict.DEFINITELY_TRUE
    if values == {False}:
        return Verdict.DEFINITELY_FALSE
    return Verdict.GLUT


def summarize_numbers(per_branch: dict[str, float]) -> NumberSummary:
    if not per_branch:
        raise EmptyBranchSet("no branches to summarize")
    values = list(per_branch.values())
    lo, hi = min(values), max(values)
    return NumberSummary(
        per_branch=dict(per_branch),
        min=lo,
        max=hi,
        mean=sum(values) / len(values),
        unanimous=(lo == hi),
    )


def diff_lists(per_branch: dict[str, list[int]]) -> ListDiff:
    if not per_branch:
        raise EmptyBranchSet("no branches to diff")
    sets: dict[str, set[int]] = {}
    for branch, ids in per_branch.items():
        s = set(ids)
        if len(s) != len(ids):
            raise DuplicateId(f"duplicate ids in branch {branch!r}")
        sets[branch] = s
    consensus = set.intersection(*sets.values())
    exclusive = {
        branch: sorted(sets[branch] - consensus) for branch in per_branch
    }
    return ListDiff(
        per_branch={b: list(ids) for b, ids in per_branch.items()},
        consensus=sorted(consensus),
        exclusive=exclusive,
    )


def undecided_ids(diff: ListDiff) -> list[int]:
    """Ids present in some branch but not all: the diff's union of exclusives."""
    out: set[int] = set()
    for ids in diff.exclusive.values():
        out.update(ids)
    return sorted(out)


# -- KPI sentences over branch models -------------------------------------


@dataclass(frozen=True)
class Atom:
    """Strict threshold claim: the named KPI exceeds the threshold."""

    kpi: str
    threshold: float


@dataclass(frozen=True)
class Not:
    operand: "KpiSentence"


@dataclass(frozen=True)
class And:
    lhs: "KpiSentence"
    rhs: "KpiSentence"


@dataclass(frozen=True)
class Or:
    lhs: "KpiSentence"
    rhs: "KpiSentence"


KpiSentence = Atom | Not | And | Or


@dataclass(frozen=True)
class BranchModel:
    branch: str
    kpi_values: tuple[tuple[str, float], ...]

    @staticmethod
    def of(branch: str, **kpis: float) -> "BranchModel":
        return BranchModel(branch, tuple(sorted(kpis.items())))

    def value(self, kpi: str) -> float:
        for name, v in self.kpi_values:
            if name == kpi:
                return v
        raise UnknownKpi(f"branch {self.branch!r} has no KPI {kpi!r}")


@dataclass(frozen=True)
class SupervalOutcome:
    true_plus: bool
    true_minus: bool
    verdict: Verdict


def eval_classical(sentence: KpiSentence, model: BranchModel) -> bool:
    """Ordinary two-valued evaluation within one branch."""
    if isinstance(sentence, Atom):
        return model.value(sentence.kpi) > sentence.threshold
    if isinstance(sentence, Not):
        return not eval_classical(sentence.operand, model)
    if isinstance(sentence, And):
        return eval_classical(sentence.lhs, model) and eval_classical(
            sentence.rhs, model
        )
    if isinstance(sentence, Or):
        return eval_classical(sentence.lhs, model) or eval_classical(
            sentence.rhs, model
        )
    raise TypeError(f"unknown sentence node {sentence!r}")


def eval_superval(
    sentence: KpiSentence, models: list[BranchModel]
) -> SupervalOutcome:
    """Existential truth and falsity over the branch models, whole-sentence."""
    if not models:
        raise EmptyBranchSet("no branch models")
    seen = set()
    for m in models:
        if m.branch in seen:
            raise DuplicateId(f"duplicate branch model {m.branch!r}")
        seen.add(m.branch)
    true_plus = False
    true_minus = False
    for m in models:
        if eval_classical(sentence, m):
            true_plus = True
        else:
            true_minus = True
    if true_plus and true_minus:
        verdict = Verdict.GLUT
    elif true_plus:
        verdict = Verdict.DEFINITELY_TRUE
    else:
        verdict = Verdict.DEFINITELY_FALSE
    return SupervalOutcome(true_plus, true_minus, verdict)


# -- textual grammar -------------------------------------------------------
#
#   atom     := NAME '>' NUMBER
#   sentence := atom | 'not' '(' sentence ')' | '(' sentence ('and'|'or') sentence ')'

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<lparen>\()|(?P<rparen>\))|(?P<gt>>)"
    r"|(?P<number>-?\d+(?:\.\d+)?)|(?P<name>[A-Za-z_][A-Za-z0-9_]*))"
)


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            rest = text[pos:].strip()
            if not rest:
                break
            raise SentenceParseError(f"unexpected input at {rest[:20]!r}")
        pos = m.end()
        for kind, value in m.groupdict().items():
            if value is not None:
                tokens.append((kind, value))
    return tokens


class _Parser:
    def __init__(self, tokens: list[tuple[str, str]]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> tuple[str, str] | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self, kind: str) -> str:
        tok = self.peek()
        if tok is None or tok[0] != kind:
            raise SentenceParseError(f"expected {kind}, got {tok}")
        self.pos += 1
        return tok[1]

    def sentence(self) -> KpiSentence:
        tok = self.peek()
        if tok is None:
            raise SentenceParseError("empty sentence")
        kind, value = tok
        if kind == "name" and value.lower() == "not":
            self.take("name")
            self.take("lparen")
            inner = self.sentence()
            self.take("rparen")
            return Not(inner)
        if kind == "name":
            return self.atom()
        if kind == "lparen":
            self.take("lparen")
            lhs = self.sentence()
            op = self.take("name").lower()
            if op not in ("and", "or"):
                raise SentenceParseError(f"expected 'and'/'or', got {op!r}")
            rhs = self.sentence()
            self.take("rparen")
            return And(lhs, rhs) if op == "and" else Or(lhs, rhs)
        raise SentenceParseError(f"unexpected token {tok}")

    def atom(self) -> Atom:
        name = self.take("name")
        self.take("gt")
        number = self.take("number")
        return Atom(name, float(number))


def parse_sentence(text: str) -> KpiSentence:
    parser = _Parser(_tokenize(text))
    out = parser.sentence()
    if parser.peek() is not None:
        raise SentenceParseError(f"trailing input after sentence: {parser.peek()}")
    return out


def render_sentence(sentence: KpiSentence) -> str:
    if isinstance(sentence, Atom):
        t = sentence.threshold
        num = repr(int(t)) if float(t).is_integer() else repr(t)
        return f"{sentence.kpi} > {num}"
    if isinstance(sentence, Not):
        return f"not ({render_sentence(sentence.operand)})"
    if isinstance(sentence, And):
        return f"({render_sentence(sentence.lhs)} and {render_sentence(sentence.rhs)})"
    if isinstance(sentence, Or):
        return f"({render_sentence(sentence.lhs)} or {render_sentence(sentence.rhs)})"
    raise TypeError(f"unknown sentence node {sentence!r}")

"""Deterministic question templates and their canonical plans.

Seven parameterized templates cover the demo's question surface; free text
is matched case-insensitively against them instead of going through a
model-backed translator, which keeps the whole flow reproducible. Each
template compiles to a frozen spec carrying its result kind, and every spec
has exactly one canonical single-branch plan.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from decimal import Decimal

from .errors import BadParameter, UnrecognizedQuestion, UnsupportedQuestion
from .exprs import BoolOp, Compare, Arith, col, lit
from .plans import Aggregate, AggSpec, Filter, HashJoin, Plan, Project, Scan, TopK, WindowRank

USERS = "users"
PREDICTIONS = "predictions"

DEFAULT_K = 10
DEFAULT_TAU = 0.02
DEFAULT_INTEREST = "smartphones"
DEFAULT_SEGMENTS = ("top",)

# Table 1's phrasing uses the singular; the generated vocabulary is plural.
_INTEREST_ALIASES = {"smartphone": "smartphones"}


class ResultKind(enum.Enum):
    NUMBER = "number"
    BOOLEAN = "boolean"
    LIST = "list"


@dataclass(frozen=True)
class BuyerCount:
    """How many customers are expected to buy tomorrow? (number)"""

    template_id = "q1"
    result_kind = ResultKind.NUMBER


@dataclass(frozen=True)
class InterestBuyerCount:
    """How many shoppers with a given interest will convert tomorrow? (number)"""

    interest: str

    template_id = "q2"
    result_kind = ResultKind.NUMBER


@dataclass(frozen=True)
class SegmentTopBuyerCount:
    """Expected buyers among each listed segment's top customers by value. (number)"""

    segments: tuple[str, ...]
    k: int = DEFAULT_K

    template_id = "q3"
    result_kind = ResultKind.NUMBER


@dataclass(frozen=True)
class ConversionAbove:
    """Is tomorrow's conversion rate above the threshold? (boolean)"""

    tau: float

    template_id = "q4"
    result_kind = ResultKind.BOOLEAN


@dataclass(frozen=True)
class UserWillBuy:
    """Is one specific customer expected to buy tomorrow? (boolean)"""

    user_id: int

    template_id = "q5"
    result_kind = ResultKind.BOOLEAN


@dataclass(frozen=True)
class TopProspects:
    """The top-k expected buyers by score. (list)"""

    k: int = DEFAULT_K

    template_id = "q6"
    result_kind = ResultKind.LIST


@dataclass(frozen=True)
class UndecidedUsers:
    """Customers whose buy prediction differs across branches. (list)"""

    template_id = "q7"
    result_kind = ResultKind.LIST


QuerySpec = (
    BuyerCount
    | InterestBuyerCount
    | SegmentTopBuyerCount
    | ConversionAbove
    | UserWillBuy
    | TopProspects
    | UndecidedUsers
)

SPEC_CLASSES = {
    "q1": BuyerCount,
    "q2": InterestBuyerCount,
    "q3": SegmentTopBuyerCount,
    "q4": ConversionAbove,
    "q5": UserWillBuy,
    "q6": TopProspects,
    "q7": UndecidedUsers,
}


def _normalize(text: str) -> str:
    text = text.strip().lower().replace("’", "'")
    return re.sub(r"\s+", " ", text)


def _parse_percent(text: str) -> float:
    text = text.strip()
    try:
        if text.endswith("%"):
            value = float(text[:-1]) / 100.0
        else:
            value = float(text)
    except ValueError:
        raise BadParameter(f"cannot parse threshold {text!r}") from None
    if not 0.0 < value < 1.0:
        raise BadParameter(f"threshold {text!r} must land strictly between 0 and 1")
    return value


def format_percent(tau: float) -> str:
    scaled = Decimal(repr(tau)) * 100
    normalized = scaled.normalize()
    if normalized == normalized.to_integral_value():
        return f"{int(normalized)}%"
    return f"{normalized}%"


def _parse_positive_int(text: str, what: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise BadParameter(f"{what} must be an integer, got {text!r}") from None
    if value <= 0:
        raise BadParameter(f"{what} must be positive, got {value}")
    return value


def _split_segments(text: str) -> tuple[str, ...]:
    parts = [p.strip() for p in re.split(r",| and ", text) if p.strip()]
    if not parts:
        raise BadParameter("no segments given")
    return tuple(parts)


_TEMPLATES: list[tuple[str, str, str]] = [
    (
        "q1",
        r"how many customers are expected to buy tomorrow\?",
        "How many customers are expected to buy tomorrow?",
    ),
    (
        "q2",
        r"how many (?P<interest>.+?) shoppers will convert tomorrow\?",
        "How many {interest} shoppers will convert tomorrow?",
    ),
    (
        "q3",
        r"how many customers in the (?P<segments>.+?) segments? are expected "
        r"to buy tomorrow(?: \(top (?P<k>\S+) per segment\))?\?",
        "How many customers in the {segments} segments are expected to buy tomorrow?",
    ),
    (
        "q4",
        r"is tomorrow's conversion rate above (?P<tau>[^?]+)\?",
        "Is tomorrow's conversion rate above {tau}?",
    ),
    (
        "q5",
        r"is customer (?P<user_id>\S+) expected to buy tomorrow\?",
        "Is customer {user_id} expected to buy tomorrow?",
    ),
    (
        "q6",
        r"which customers are expected to buy tomorrow(?: \(top (?P<k>\S+)\))?\?",
        "Which customers are expected to buy tomorrow?",
    ),
    (
        "q7",
        r"which customers are undecided and might be influenced by messaging\?",
        "Which customers are undecided and might be influenced by messaging?",
    ),
]

_COMPILED = [(tid, re.compile(f"^{pattern}$"), display) for tid, pattern, display in _TEMPLATES]


def supported_templates() -> list[str]:
    return [display for _, _, display in _COMPILED]


def compile_question(question: str) -> QuerySpec:
    """Match free text against the templates and build the typed spec."""
    text = _normalize(question)
    for tid, pattern, _ in _COMPILED:
        m = pattern.match(text)
        if m is None:
            continue
        groups = m.groupdict()
        if tid == "q1":
            return BuyerCount()
        if tid == "q2":
            interest = groups["interest"].strip()
            return InterestBuyerCount(_INTEREST_ALIASES.get(interest, interest))
        if tid == "q3":
            segments = _split_segments(groups["segments"])
            k = DEFAULT_K if groups["k"] is None else _parse_positive_int(groups["k"], "k")
            return SegmentTopBuyerCount(segments, k)
        if tid == "q4":
            return ConversionAbove(_parse_percent(groups["tau"]))
        if tid == "q5":
            try:
                user_id = int(groups["user_id"])
            except ValueError:
                raise BadParameter(
                    f"customer id must be an integer, got {groups['user_id']!r}"
                ) from None
            return UserWillBuy(user_id)
        if tid == "q6":
            k = DEFAULT_K if groups["k"] is None else _parse_positive_int(groups["k"], "k")
            return TopProspects(k)
        return UndecidedUsers()
    supported = "\n  ".join(supported_templates())
    raise UnrecognizedQuestion(
        f"question {question!r} matches no template; supported:\n  {supported}"
    )


def describe(spec: QuerySpec) -> tuple[str, str]:
    """Canonical question text plus a plan sketch; compile round-trips it."""
    return _canonical_question(spec), sketch(plan_for(spec))


def _canonical_question(spec: QuerySpec) -> str:
    if isinstance(spec, BuyerCount):
        return "How many customers are expected to buy tomorrow?"
    if isinstance(spec, InterestBuyerCount):
        display = "smartphone" if spec.interest == "smartphones" else spec.interest
        return f"How many {display} shoppers will convert tomorrow?"
    if isinstance(spec, SegmentTopBuyerCount):
        segs = " and ".join(spec.segments)
        suffix = "" if spec.k == DEFAULT_K else f" (top {spec.k} per segment)"
        return (
            f"How many customers in the {segs} segments are expected "
            f"to buy tomorrow{suffix}?"
        )
    if isinstance(spec, ConversionAbove):
        return f"Is tomorrow's conversion rate above {format_percent(spec.tau)}?"
    if isinstance(spec, UserWillBuy):
        return f"Is customer {spec.user_id} expected to buy tomorrow?"
    if isinstance(spec, TopProspects):
        suffix = "" if spec.k == DEFAULT_K else f" (top {spec.k})"
        return f"Which customers are expected to buy tomorrow{suffix}?"
    if isinstance(spec, UndecidedUsers):
        return "Which customers are undecided and might be influenced by messaging?"
    raise UnsupportedQuestion(f"unsupported spec {spec!r}")


def validate_spec(spec: QuerySpec) -> None:
    if isinstance(spec, SegmentTopBuyerCount):
        if spec.k <= 0:
            raise BadParameter("k must be positive")
        if not spec.segments:
            raise BadParameter("segments must be nonempty")
    if isinstance(spec, TopProspects) and spec.k <= 0:
        raise BadParameter("k must be positive")
    if isinstance(spec, ConversionAbove) and not 0.0 < spec.tau < 1.0:
        raise BadParameter("threshold must land strictly between 0 and 1")


def _will_buy() -> Compare:
    return Compare("=", col("will_buy"), lit(True))


def _segment_membership(segments: tuple[str, ...]) -> Compare | BoolOp:
    checks = tuple(Compare("=", col("segment"), lit(s)) for s in segments)
    if len(checks) == 1:
        return checks[0]
    return BoolOp("or", checks)


def plan_for(spec: QuerySpec) -> Plan:
    """Canonical single-branch plan; identical specs yield identical trees."""
    validate_spec(spec)
    if isinstance(spec, BuyerCount):
        return Aggregate(
            Filter(Scan(PREDICTIONS), _will_buy()),
            (),
            (AggSpec.count("buyers"),),
        )
    if isinstance(spec, InterestBuyerCount):
        matching_users = Filter(
            Scan(USERS), Compare("=", col("interest"), lit(spec.interest))
        )
        joined = HashJoin(matching_users, Scan(PREDICTIONS), ("user_id",), ("user_id",))
        return Aggregate(joined, (), (AggSpec.count_if(_will_buy(), "buyers"),))
    if isinstance(spec, SegmentTopBuyerCount):
        ranked = WindowRank(Scan(USERS), ("segment",), "ltv", True, "segment_rank")
        top = Filter(
            ranked,
            BoolOp(
                "and",
                (
                    _segment_membership(spec.segments),
                    Compare("<=", col("segment_rank"), lit(spec.k)),
                ),
            ),
        )
        joined = HashJoin(top, Scan(PREDICTIONS), ("user_id",), ("user_id",))
        return Aggregate(joined, (), (AggSpec.count_if(_will_buy(), "buyers"),))
    if isinstance(spec, ConversionAbove):
        counted = Aggregate(
            Scan(PREDICTIONS),
            (),
            (AggSpec.count_if(_will_buy(), "buyers"), AggSpec.count("total")),
        )
        rate = Arith("/", col("buyers"), col("total"))
        return Project(counted, (Compare(">", rate, lit(spec.tau)),), ("above_threshold",))
    if isinstance(spec, UserWillBuy):
        hits = Aggregate(
            Filter(
                Scan(PREDICTIONS),
                BoolOp(
                    "and",
                    (Compare("=", col("user_id"), lit(spec.user_id)), _will_buy()),
                ),
            ),
            (),
            (AggSpec.count("hits"),),
        )
        return Project(hits, (Compare(">", col("hits"), lit(0)),), ("will_buy",))
    if isinstance(spec, TopProspects):
        top = TopK(Filter(Scan(PREDICTIONS), _will_buy()), "score", True, spec.k)
        return Project(top, (col("user_id"),), ("user_id",))
    if isinstance(spec, UndecidedUsers):
        return Project(
            Filter(Scan(PREDICTIONS), _will_buy()), (col("user_id"),), ("user_id",)
        )
    raise UnsupportedQuestion(f"unsupported spec {spec!r}")


def tables_used(spec: QuerySpec) -> tuple[str, ...]:
    names: set[str] = set()

    def walk(plan: Plan) -> None:
        if isinstance(plan, Scan):
            names.add(plan.table)
            return
        for attr in ("input", "left", "right"):
            child = getattr(plan, attr, None)
            if child is not None:
                walk(child)

    walk(plan_for(spec))
    return tuple(sorted(names))


def sketch(plan: Plan) -> str:
    """Compact one-line rendering of a plan tree."""
    if isinstance(plan, Scan):
        return f"scan({plan.table})"
    if isinstance(plan, Filter):
        return f"filter({sketch(plan.input)})"
    if isinstance(plan, Project):
        return f"project[{', '.join(plan.names)}]({sketch(plan.input)})"
    if isinstance(plan, HashJoin):
        return f"hash_join({sketch(plan.left)}, {sketch(plan.right)})"
    if isinstance(plan, Aggregate):
        aggs = ", ".join(a.kind for a in plan.aggs)
        return f"aggregate[{aggs}]({sketch(plan.input)})"
    if isinstance(plan, WindowRank):
        return f"window_rank[{plan.order_col}]({sketch(plan.input)})"
    if isinstance(plan, TopK):
        return f"top_k[{plan.k}]({sketch(plan.input)})"
    return f"branch_union({plan.table})"


def spec_to_wire(spec: QuerySpec) -> dict:
    """JSON-facing encoding: template id plus its parameters."""
    params: dict = {}
    if isinstance(spec, InterestBuyerCount):
        params = {"interest": spec.interest}
    elif isinstance(spec, SegmentTopBuyerCount):
        params = {"segments": list(spec.segments), "k": spec.k}
    elif isinstance(spec, ConversionAbove):
        params = {"tau": spec.tau}
    elif isinstance(spec, UserWillBuy):
        params = {"user_id": spec.user_id}
    elif isinstance(spec, TopProspects):
        params = {"k": spec.k}
    return {"id": spec.template_id, "params": params}


def spec_from_wire(data: dict) -> QuerySpec:
    tid = data.get("id")
    if tid not in SPEC_CLASSES:
        raise UnsupportedQuestion(f"unknown template id {tid!r}")
    params = data.get("params") or {}
    try:
        if tid == "q1":
            return BuyerCount()
        if tid == "q2":
            return InterestBuyerCount(str(params["interest"]))
        if tid == "q3":
            return SegmentTopBuyerCount(
                tuple(params.get("segments", DEFAULT_SEGMENTS)),
                int(params.get("k", DEFAULT_K)),
            )
        if tid == "q4":
            return ConversionAbove(float(params.get("tau", DEFAULT_TAU)))
        if tid == "q5":
            return UserWillBuy(int(params["user_id"]))
        if tid == "q6":
            return TopProspects(int(params.get("k", DEFAULT_K)))
        return UndecidedUsers()
    except KeyError as e:
        raise BadParameter(f"missing parameter {e.args[0]!r} for {tid}") from None
    except (TypeError, ValueError) as e:
        raise BadParameter(f"bad parameter for {tid}: {e}") from None


def template_catalog() -> list[dict]:
    """Template descriptions for the API and CLI, ordered by result kind."""
    entries = [
        {
            "id": "q1",
            "result_kind": "number",
            "template": "How many customers are expected to buy tomorrow?",
            "slots": {},
        },
        {
            "id": "q2",
            "result_kind": "number",
            "template": "How many {interest} shoppers will convert tomorrow?",
            "slots": {"interest": DEFAULT_INTEREST},
        },
        {
            "id": "q3",
            "result_kind": "number",
            "template": (
                "How many customers in the {segments} segments are expected "
                "to buy tomorrow?"
            ),
            "slots": {"segments": list(DEFAULT_SEGMENTS), "k": DEFAULT_K},
        },
        {
            "id": "q4",
            "result_kind": "boolean",
            "template": "Is tomorrow's conversion rate above {tau}?",
            "slots": {"tau": DEFAULT_TAU},
        },
        {
            "id": "q5",
            "result_kind": "boolean",
            "template": "Is customer {user_id} expected to buy tomorrow?",
            "slots": {"user_id": None},
        },
        {
            "id": "q6",
            "result_kind": "list",
            "template": "Which customers are expected to buy tomorrow?",
            "slots": {"k": DEFAULT_K},
        },
        {
            "id": "q7",
            "result_kind": "list",
            "template": (
                "Which customers are undecided and might be influenced by messaging?"
            ),
            "slots": {},
        },
    ]
    return entries

"""Incremental plan recognition over a dialogue grammar, with repair.

The grammar is a set of plan operators.  Each operator fulfills a goal
category, may be guarded by constraints, lists ordered subgoals (terminal
acts or goal categories, optionally marked ``?`` optional or ``*``
repeatable), and may fire actions when it completes.  Recognition is
hierarchical, depth first, and left to right; several expansion readings
may stay alive at once and the first one (in operator file order) decides
the reported tree.

Unexpected input is always absorbed.  The cascade is:

1. anytime insertion: acts tagged anytime in the inventory are treated as
   unforeseen events and attached as deviation leaves without consulting
   the grammar, which keeps the operators free of anytime tests;
2. statistical repair: a bridging act ``b`` is searched that the grammar
   admits between the effective predecessor (social-noise acts skipped)
   and the current act; candidates are scored by the product of the two
   smoothed bigram transition probabilities, each scaled by 1000, and
   tried in score order against the compatibility table, attaching ``b``
   as an additional reading of the previous or the current utterance;
3. plan fallback: the act becomes a marked deviation leaf and parsing
   state is preserved so later expected acts still parse.

Recognition never deletes or reorders input; repair only adds readings or
deviation marks.  A reading chosen by repair is final: later parse dead
ends trigger new repairs rather than backtracking across repair events.
"""

from __future__ import annotations

import bisect
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import NamedTuple

from .corpus import ActInventory, ActLabel, Dialogue, FormatError, Utterance
from .ngram import NGramModel

__all__ = [
    "SubgoalItem",
    "PlanOperator",
    "CompatibilityTable",
    "DialogueGrammar",
    "TreeLeaf",
    "TreeNode",
    "DialogueTree",
    "RepairEvent",
    "RepairOutcome",
    "PlanRecognizer",
    "load_grammar",
    "parse_grammar",
    "load_compatibility",
    "parse_compatibility",
    "load_lexicon",
    "parse_lexicon",
    "CONSTRAINT_REGISTRY",
    "ACTION_REGISTRY",
]

# Built-in constraint predicates and operator actions.  Constraints are
# evaluated against the recognizer session; actions are recorded in the
# session's memory log when their operator completes.
CONSTRAINT_REGISTRY = {
    "speakers-known": lambda session: session.speakers_known,
}
ACTION_REGISTRY = ("update-memory",)

_CATEGORY_NAME = re.compile(r"[A-Z][A-Z_]*\Z")
_ITEM = re.compile(r"(?:\[([A-Z][A-Z_]*)\]|([A-Z][A-Z_]*))([?*])?\Z")


@dataclass(frozen=True)
class SubgoalItem:
    """One ordered subgoal: a terminal act or a goal category."""

    target: str
    is_category: bool
    optional: bool = False
    repeatable: bool = False


@dataclass(frozen=True)
class PlanOperator:
    name: str
    goal: str
    subgoals: tuple[SubgoalItem, ...]
    constraints: tuple[str, ...] = ()
    actions: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.subgoals:
            raise ValueError(f"operator {self.name!r} has no subgoals")
        for item in self.subgoals:
            if item.is_category and item.target == self.goal:
                raise ValueError(
                    f"operator {self.name!r} lists its own goal as a direct subgoal"
                )


@dataclass(frozen=True)
class CompatibilityTable:
    """Ordered act pairs admissible as readings of one utterance.

    A pair (X, Y) means the readings X then Y may describe a single
    utterance; the relation is directional and explicitly enumerated.
    """

    pairs: frozenset

    def allows(self, first: str, second: str) -> bool:
        return (first, second) in self.pairs

    @classmethod
    def empty(cls) -> "CompatibilityTable":
        return cls(frozenset())


@dataclass(frozen=True)
class DialogueGrammar:
    operators: tuple[PlanOperator, ...]
    root: str
    compatibility: CompatibilityTable

    def __post_init__(self):
        producers: dict[str, tuple[PlanOperator, ...]] = {}
        for op in self.operators:
            producers[op.goal] = producers.get(op.goal, ()) + (op,)
        object.__setattr__(self, "_producers", producers)
        if self.root not in producers:
            raise ValueError(f"no operator produces the root goal {self.root!r}")

    @property
    def producers(self) -> dict[str, tuple[PlanOperator, ...]]:
        return self._producers

    def with_compatibility(self, table: CompatibilityTable) -> "DialogueGrammar":
        return replace(self, compatibility=table)


def parse_grammar(
    text: str,
    inventory: ActInventory,
    source: str = "<string>",
    compatibility: CompatibilityTable | None = None,
) -> DialogueGrammar:
    """Parse operator blocks; the first operator's goal is the root."""
    operators: list[PlanOperator] = []
    block: dict | None = None
    block_line = 0

    def flush():
        nonlocal block
        if block is None:
            return
        if "goal" not in block:
            raise FormatError(
                f"operator {block['name']!r} has no goal", source, block_line
            )
        if not block.get("subgoals"):
            raise FormatError(
                f"operator {block['name']!r} has no subgoals", source, block_line
            )
        try:
            operators.append(
                PlanOperator(
                    name=block["name"],
                    goal=block["goal"],
                    subgoals=tuple(block["subgoals"]),
                    constraints=tuple(block.get("constraints", ())),
                    actions=tuple(block.get("actions", ())),
                )
            )
        except ValueError as exc:
            raise FormatError(str(exc), source, block_line) from None
        block = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, rest = line.partition(" ")
        rest = rest.strip()
        if key == "operator":
            flush()
            if not rest:
                raise FormatError("operator line is missing a name", source, lineno)
            block = {"name": rest}
            block_line = lineno
            continue
        if block is None:
            raise FormatError(f"{key!r} outside an operator block", source, lineno)
        if key == "goal":
            if not _CATEGORY_NAME.match(rest):
                raise FormatError(f"invalid goal category {rest!r}", source, lineno)
            block["goal"] = rest
        elif key == "subgoals":
            items = []
            for token in rest.split():
                match = _ITEM.match(token)
                if not match:
                    raise FormatError(f"invalid subgoal item {token!r}", source, lineno)
                category, act, suffix = match.groups()
                if act is not None and act not in inventory:
                    raise FormatError(f"unknown act {act!r}", source, lineno)
                items.append(
                    SubgoalItem(
                        target=category or act,
                        is_category=category is not None,
                        optional=suffix == "?",
                        repeatable=suffix == "*",
                    )
                )
            block["subgoals"] = items
        elif key == "constraints":
            names = rest.split()
            for name in names:
                if name not in CONSTRAINT_REGISTRY:
                    raise FormatError(f"unknown constraint {name!r}", source, lineno)
            block["constraints"] = names
        elif key == "actions":
            names = rest.split()
            for name in names:
                if name not in ACTION_REGISTRY:
                    raise FormatError(f"unknown action {name!r}", source, lineno)
            block["actions"] = names
        else:
            raise FormatError(f"unknown grammar directive {key!r}", source, lineno)
    flush()
    if not operators:
        raise FormatError("grammar defines no operators (missing root)", source)

    produced = {op.goal for op in operators}
    for op in operators:
        for item in op.subgoals:
            if item.is_category and item.target not in produced:
                raise FormatError(
                    f"operator {op.name!r} references undefined goal "
                    f"category {item.target!r}",
                    source,
                )
    root = operators[0].goal
    reachable = {root}
    frontier = [root]
    while frontier:
        goal = frontier.pop()
        for op in operators:
            if op.goal != goal:
                continue
            for item in op.subgoals:
                if item.is_category and item.target not in reachable:
                    reachable.add(item.target)
                    frontier.append(item.target)
    unreachable = sorted(produced - reachable)
    if unreachable:
        raise FormatError(
            f"unreachable goal categories: {', '.join(unreachable)}", source
        )
    return DialogueGrammar(
        operators=tuple(operators),
        root=root,
        compatibility=compatibility or CompatibilityTable.empty(),
    )


def load_grammar(
    path: str | Path,
    inventory: ActInventory,
    compatibility: CompatibilityTable | None = None,
) -> DialogueGrammar:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"grammar file not found: {path}")
    return parse_grammar(
        path.read_text(encoding="utf-8"),
        inventory,
        source=str(path),
        compatibility=compatibility,
    )


def parse_compatibility(
    text: str, inventory: ActInventory, source: str = "<string>"
) -> CompatibilityTable:
    """Parse ``<ACT> + <ACT>`` lines into a directional pair table."""
    pairs = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 3 or fields[1] != "+":
            raise FormatError(
                f"expected '<ACT> + <ACT>', got {line!r}", source, lineno
            )
        first, second = fields[0], fields[2]
        for name in (first, second):
            if name not in inventory:
                raise FormatError(f"unknown act {name!r}", source, lineno)
        pairs.add((first, second))
    return CompatibilityTable(frozenset(pairs))


def load_compatibility(path: str | Path, inventory: ActInventory) -> CompatibilityTable:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"compatibility file not found: {path}")
    return parse_compatibility(
        path.read_text(encoding="utf-8"), inventory, source=str(path)
    )


def parse_lexicon(
    text: str, inventory: ActInventory, source: str = "<string>"
) -> dict[str, tuple[str, ...]]:
    """Parse ``<ACT>: word, word`` lines; every inventory act must appear."""
    lexicon: dict[str, tuple[str, ...]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        name, sep, rest = line.partition(":")
        name = name.strip()
        if not sep:
            raise FormatError(f"expected '<ACT>: words', got {line!r}", source, lineno)
        if name not in inventory:
            raise FormatError(f"unknown act {name!r}", source, lineno)
        if name in lexicon:
            raise FormatError(f"duplicate lexicon entry for {name!r}", source, lineno)
        words = tuple(w.strip() for w in rest.split(",") if w.strip())
        lexicon[name] = words
    missing = [a.name for a in inventory.acts if a.name not in lexicon]
    if missing:
        raise FormatError(
            f"lexicon missing entries for: {', '.join(missing)}", source
        )
    return lexicon


def load_lexicon(path: str | Path, inventory: ActInventory) -> dict[str, tuple[str, ...]]:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"lexicon file not found: {path}")
    return parse_lexicon(path.read_text(encoding="utf-8"), inventory, source=str(path))


# --------------------------------------------------------------------------
# Dialogue tree
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TreeLeaf:
    """A consumed act reading.  ``kind`` is 'normal' for grammar-consumed
    input, 'reading' for repair-inserted additional readings, 'deviation'
    for anytime or fallback attachments."""

    act: str
    utterance: int
    reading: int
    kind: str = "normal"

    @property
    def deviation(self) -> bool:
        return self.kind == "deviation"

    @property
    def inserted(self) -> bool:
        return self.kind == "reading"


@dataclass
class TreeNode:
    goal: str
    operator: str | None
    children: list

    @property
    def deviation(self) -> bool:
        return False


@dataclass
class DialogueTree:
    """The intentional structure built by the recognizer."""

    root: TreeNode

    def leaves(self):
        """Leaves in structural (depth-first) order."""
        def walk(node):
            for child in node.children:
                if isinstance(child, TreeLeaf):
                    yield child
                else:
                    yield from walk(child)
        yield from walk(self.root)

    def leaf_readings(self) -> list[TreeLeaf]:
        """Leaves in utterance order (readings of one utterance in order).

        Repair may attach a reading of an earlier utterance after later
        deviation leaves were placed, so the structural order can
        interleave; this ordering reproduces the processed sequence.
        """
        return sorted(self.leaves(), key=lambda l: (l.utterance, l.reading))

    def render(self) -> str:
        lines: list[str] = []

        def walk(node, depth):
            if isinstance(node, TreeLeaf):
                marks = ""
                if node.deviation:
                    marks = " [deviation]"
                elif node.inserted:
                    marks = " [added reading]"
                lines.append("  " * depth + f"- {node.act}{marks}")
                return
            label = node.goal if node.operator is None else f"{node.goal} <{node.operator}>"
            lines.append("  " * depth + label)
            for child in node.children:
                walk(child, depth + 1)

        walk(self.root, 0)
        return "\n".join(lines)


_EVENT_KINDS = ("anytime-insertion", "statistical-reading", "plan-fallback")


@dataclass(frozen=True)
class RepairEvent:
    """Audit record for one repair; position is the utterance index."""

    kind: str
    position: int
    act: ActLabel
    candidates: tuple = ()
    chosen: ActLabel | None = None
    attachment: str | None = None

    def __post_init__(self):
        if self.kind not in _EVENT_KINDS:
            raise ValueError(f"unknown repair kind {self.kind!r}")
        if self.kind == "statistical-reading":
            if not self.candidates:
                raise ValueError("statistical repair events carry scored candidates")
            scores = [score for _, score in self.candidates]
            if any(b > a for a, b in zip(scores, scores[1:])):
                raise ValueError("candidate scores must be recorded in descending order")
            if self.chosen is None or self.attachment not in ("previous", "current"):
                raise ValueError("statistical repair events record the chosen attachment")


class RepairOutcome(NamedTuple):
    attachment: str  # "previous" | "current"
    act: ActLabel
    cursor: int  # reading index of the current act after insertion


# --------------------------------------------------------------------------
# Parse state (persistent structures shared across live readings)
# --------------------------------------------------------------------------


class _Cell(NamedTuple):
    head: object
    tail: object


def _stack_items(cell):
    while cell is not None:
        yield cell.head
        cell = cell.tail


class _PState(NamedTuple):
    agenda: object  # _Cell chain of pending entries
    log: object  # _Cell chain of construction records, newest first
    next_id: int
    parent: int  # attachment point for deviation leaves


class _CtxEntry(NamedTuple):
    act: ActLabel
    changed: bool
    noise: bool
    utterance: int
    reading: int


class PlanRecognizer:
    """One recognition session; feed utterances with :meth:`recognize_step`.

    The grammar, model, inventory, and compatibility table are shared
    immutable inputs; the session itself is mutated single-threaded.
    """

    def __init__(
        self,
        grammar: DialogueGrammar,
        inventory: ActInventory,
        model: NGramModel | None = None,
        *,
        raw_frequency_bridging: bool = False,
        speakers_known: bool = False,
        trace: bool = False,
        live_cap: int = 64,
        probe_cap: int = 32,
        expansion_cap: int = 64,
        walk_budget: int = 20000,
    ):
        self.grammar = grammar
        self.inventory = inventory
        self.model = model
        self.raw_frequency_bridging = raw_frequency_bridging
        self.speakers_known = speakers_known
        self.live_cap = live_cap
        self.probe_cap = probe_cap
        self.expansion_cap = expansion_cap
        self.walk_budget = walk_budget
        self._steps_left = 0
        self.trace_lines: list[str] | None = [] if trace else None
        self.events: list[RepairEvent] = []
        root_item = SubgoalItem(grammar.root, is_category=True)
        initial = _PState(
            agenda=_Cell(("item", root_item, 0), None),
            log=_Cell(("node", 0, -1, grammar.root, None), None),
            next_id=1,
            parent=0,
        )
        self._states: list[_PState] = [initial]
        self._context: list[_CtxEntry] = []
        self._readings: list[list[ActLabel]] = []
        self._speakers: list[str] = []

    # -- public surface ----------------------------------------------------

    def recognize_step(self, utterance: Utterance) -> list[RepairEvent]:
        """Process one utterance; returns the repair events it caused."""
        start = len(self.events)
        utt_idx = len(self._readings)
        prev_speaker = self._speakers[-1] if self._speakers else None
        self._speakers.append(utterance.speaker)
        self._readings.append(list(utterance.acts))
        cursor = 0
        while cursor < len(self._readings[utt_idx]):
            act = self._readings[utt_idx][cursor]
            changed = (
                cursor == 0
                and prev_speaker is not None
                and utterance.speaker != prev_speaker
            )
            cursor = self._process_act(act, utt_idx, cursor, changed) + 1
        return list(self.events[start:])

    def recognize(self, dialogue: Dialogue) -> DialogueTree:
        for utterance in dialogue.utterances:
            self.recognize_step(utterance)
        return self.tree

    @property
    def tree(self) -> DialogueTree:
        return _build_tree(self._states[0].log)

    @property
    def memory_log(self) -> tuple[tuple[str, str], ...]:
        """(operator, goal) records fired by completed operators, in order."""
        records = [e for e in _stack_items(self._states[0].log) if e[0] == "mem"]
        return tuple((op, goal) for _, op, goal in reversed(records))

    @property
    def utterance_readings(self) -> list[tuple[ActLabel, ...]]:
        """Final readings per processed utterance, repairs included."""
        return [tuple(readings) for readings in self._readings]

    @property
    def context_acts(self) -> list[ActLabel]:
        """The effective processed act sequence."""
        return [entry.act for entry in self._context]

    def bridge_candidates(
        self, prev: ActLabel, cur: ActLabel
    ) -> list[tuple[ActLabel, int]]:
        """Scored bridging acts admissible between prev and cur here.

        ``prev`` is the effective predecessor (social-noise acts already
        skipped).  A candidate must be consumable by the grammar from the
        current state and leave the current act consumable; its score is
        ``round(p(b|prev) * 1000 * p(cur|b) * 1000)`` over the model's
        bigram transitions.  Zero scores are dropped; ties order by act id.
        """
        if self.model is None:
            raise ValueError("statistical bridging requires a model")
        results = []
        for b in self.inventory.acts:
            succ_b = self._advance(self._states, b.name, -1, -1, limit=self.probe_cap)
            if not succ_b:
                continue
            if not self._advance(succ_b, cur.name, -1, -1, limit=1):
                continue
            p_in = self.model.transition_prob(
                b, prev, raw=self.raw_frequency_bridging
            )
            p_out = self.model.transition_prob(
                cur, b, raw=self.raw_frequency_bridging
            )
            score = round(p_in * 1000.0 * p_out * 1000.0)
            if score > 0:
                results.append((b, score))
        results.sort(key=lambda pair: (-pair[1], pair[0].id))
        return results

    def attempt_statistical_repair(
        self,
        prev_index: int,
        cur_act: ActLabel,
        utt: int,
        reading: int,
        candidates: list[tuple[ActLabel, int]],
        changed: bool = False,
    ) -> RepairOutcome | None:
        """Try candidates in score order against the compatibility table.

        For each candidate b: if (prev, b) is compatible, b becomes an
        additional reading of the previous utterance and recognition
        replays through b and the current act; otherwise if (b, cur) is
        compatible, b is prepended to the current utterance's readings.
        The first candidate whose insertion also parses wins.
        """
        prev = self._context[prev_index]
        for b, _score in candidates:
            if self.grammar.compatibility.allows(prev.act.name, b.name):
                outcome = self._reinterpret_previous(
                    prev_index, b, cur_act, utt, reading, candidates, changed
                )
                if outcome is not None:
                    return outcome
            if self.grammar.compatibility.allows(b.name, cur_act.name):
                outcome = self._reinterpret_current(
                    b, cur_act, utt, reading, candidates, changed
                )
                if outcome is not None:
                    return outcome
        return None

    def plan_fallback_repair(
        self, act: ActLabel, utt: int, reading: int, changed: bool = False
    ) -> None:
        """Attach the act as a marked deviation leaf; always succeeds.

        Parsing state is untouched, so subsequent expected acts still
        parse normally.
        """
        self._attach_deviation(act, utt, reading)
        self.events.append(RepairEvent("plan-fallback", utt, act))
        self._trace("Warning -- Repairing...")
        self._push_context(act, changed, utt, reading)

    def keywords_for_next(
        self, lexicon: dict[str, tuple[str, ...]], k: int, budget: int = 30
    ) -> list[tuple[ActLabel, tuple[str, ...]]]:
        """Top-k predicted follow-up acts paired with their keywords.

        The union of all returned keyword sets is capped at ``budget``
        distinct words, filled by prediction rank and then lexicon order;
        the keyword spotter downstream only handles a small vocabulary.
        """
        if self.model is None:
            raise ValueError("keyword prediction requires a model")
        history = [self._context_element(e) for e in self._context[-2:]]
        used: set[str] = set()
        result = []
        for act, _prob in self.model.predict_top_k(history, k):
            if act.name not in lexicon:
                raise KeyError(f"act {act.name} is missing from the keyword lexicon")
            kept = []
            for word in lexicon[act.name]:
                if word in used:
                    kept.append(word)
                elif len(used) < budget:
                    used.add(word)
                    kept.append(word)
            result.append((act, tuple(kept)))
        return result

    # -- repair cascade ----------------------------------------------------

    def _process_act(self, act: ActLabel, utt: int, reading: int, changed: bool) -> int:
        """Consume or repair one act; returns the reading index through
        which the utterance is now consumed."""
        self._trace(f"Planner: -- Processing {act.name}")
        if act in self.inventory.anytime_acts:
            # Anytime acts are unforeseen events by definition; routing them
            # through repair keeps the grammar free of positional tests.
            self._attach_deviation(act, utt, reading)
            self.events.append(RepairEvent("anytime-insertion", utt, act))
            self._trace("Warning -- Repairing...")
            self._push_context(act, changed, utt, reading)
            return reading
        successors = self._advance(self._states, act.name, utt, reading)
        if successors:
            self._states = successors
            self._push_context(act, changed, utt, reading)
            return reading
        prev_index = self._effective_predecessor()
        candidates: list[tuple[ActLabel, int]] = []
        if prev_index is not None and self.model is not None:
            candidates = self.bridge_candidates(self._context[prev_index].act, act)
        if candidates:
            self._trace("Possible insertions and their scores:")
            for candidate, score in candidates:
                self._trace(f"({candidate.name} {score})")
            outcome = self.attempt_statistical_repair(
                prev_index, act, utt, reading, candidates, changed
            )
            if outcome is not None:
                return outcome.cursor
        self.plan_fallback_repair(act, utt, reading, changed)
        return reading

    def _reinterpret_previous(
        self, prev_index, b, cur_act, utt, reading, candidates, changed
    ) -> RepairOutcome | None:
        prev = self._context[prev_index]
        if prev.utterance == utt:
            # prev is an earlier reading of the current utterance; the
            # insertion goes right before the failing reading.
            insert_at = reading
            cur_reading = reading + 1
        else:
            # Readings of an earlier utterance are all consumed, so the new
            # reading is appended; their leaf indices stay valid.
            insert_at = len(self._readings[prev.utterance])
            cur_reading = reading
        succ_b = self._advance(
            self._states, b.name, prev.utterance, insert_at, inserted=True
        )
        if not succ_b:
            return None
        succ = self._advance(succ_b, cur_act.name, utt, cur_reading)
        if not succ:
            return None
        self._states = succ
        self._readings[prev.utterance].insert(insert_at, b)
        self._insert_context(
            _CtxEntry(b, False, self._is_noise(b), prev.utterance, insert_at)
        )
        self._push_context(cur_act, changed, utt, cur_reading)
        self.events.append(
            RepairEvent(
                "statistical-reading",
                utt,
                cur_act,
                candidates=tuple(candidates),
                chosen=b,
                attachment="previous",
            )
        )
        self._trace(f"{prev.act.name} -> {prev.act.name} {b.name} !")
        self._trace("Warning -- Repairing...")
        if prev.utterance == utt:
            replayed = self._readings[utt][: cur_reading + 1]
        else:
            replayed = list(self._readings[prev.utterance]) + [cur_act]
        for reading_act in replayed:
            self._trace(f"Planner: -- Processing {reading_act.name}")
        return RepairOutcome("previous", b, cur_reading)

    def _reinterpret_current(
        self, b, cur_act, utt, reading, candidates, changed
    ) -> RepairOutcome | None:
        succ_b = self._advance(self._states, b.name, utt, reading, inserted=True)
        if not succ_b:
            return None
        succ = self._advance(succ_b, cur_act.name, utt, reading + 1)
        if not succ:
            return None
        self._states = succ
        self._readings[utt].insert(reading, b)
        # The inserted reading now opens the utterance when reading == 0, so
        # it inherits the speaker-change bit.
        self._push_context(b, changed if reading == 0 else False, utt, reading)
        self._push_context(cur_act, False, utt, reading + 1)
        self.events.append(
            RepairEvent(
                "statistical-reading",
                utt,
                cur_act,
                candidates=tuple(candidates),
                chosen=b,
                attachment="current",
            )
        )
        self._trace(f"{cur_act.name} -> {b.name} {cur_act.name} !")
        self._trace("Warning -- Repairing...")
        self._trace(f"Planner: -- Processing {b.name}")
        self._trace(f"Planner: -- Processing {cur_act.name}")
        return RepairOutcome("current", b, reading + 1)

    # -- internals ----------------------------------------------------------

    def _is_noise(self, act: ActLabel) -> bool:
        return act in self.inventory.social_noise_acts

    def _effective_predecessor(self) -> int | None:
        """Index of the last processed act that is not social noise."""
        for index in range(len(self._context) - 1, -1, -1):
            if not self._context[index].noise:
                return index
        return None

    def _push_context(self, act, changed, utt, reading):
        self._context.append(
            _CtxEntry(act, changed, self._is_noise(act), utt, reading)
        )

    def _insert_context(self, entry: _CtxEntry) -> None:
        # Keep the context in effective (utterance, reading) order; a
        # previous-utterance reading slots in before later deviations.
        keys = [(e.utterance, e.reading) for e in self._context]
        self._context.insert(
            bisect.bisect_left(keys, (entry.utterance, entry.reading)), entry
        )

    def _context_element(self, entry: _CtxEntry):
        if self.model is not None and self.model.speaker_conditioned:
            return (entry.changed, entry.act)
        return entry.act

    def _attach_deviation(self, act: ActLabel, utt: int, reading: int) -> None:
        new_states = []
        for st in self._states:
            leaf = ("leaf", st.next_id, st.parent, act.name, utt, reading, "deviation")
            new_states.append(
                _PState(st.agenda, _Cell(leaf, st.log), st.next_id + 1, st.parent)
            )
        self._states = new_states

    def _constraints_hold(self, op: PlanOperator) -> bool:
        return all(CONSTRAINT_REGISTRY[name](self) for name in op.constraints)

    def _advance(
        self,
        states: list[_PState],
        act_name: str,
        utt: int,
        reading: int,
        *,
        inserted: bool = False,
        limit: int | None = None,
    ) -> list[_PState]:
        """All ways the live states can consume ``act_name``, depth first.

        Exploration is deterministic: operator alternatives in file order,
        optional and repeatable items instance-first.  ``limit`` caps the
        number of successors; expansion depth is capped so cyclic grammars
        stay total.
        """
        if limit is None:
            limit = self.live_cap
        out: list[_PState] = []
        kind = "reading" if inserted else "normal"
        self._steps_left = self.walk_budget
        for st in states:
            if len(out) >= limit or self._steps_left <= 0:
                break
            self._walk(st.agenda, st.log, st.next_id, 0, act_name, utt, reading, kind, out, limit)
        return out

    def _walk(self, agenda, log, next_id, depth, act_name, utt, reading, kind, out, limit):
        if len(out) >= limit or agenda is None or self._steps_left <= 0:
            return
        self._steps_left -= 1
        entry = agenda.head
        if entry[0] == "done":
            _, node_id, op = entry
            new_log = log
            for action in op.actions:
                if action == "update-memory":
                    new_log = _Cell(("mem", op.name, op.goal), new_log)
            self._walk(agenda.tail, new_log, next_id, depth, act_name, utt, reading, kind, out, limit)
            return
        _, item, node_id = entry
        if depth >= self.expansion_cap:
            return
        if item.repeatable:
            bare = replace(item, repeatable=False)
            self._walk(
                _Cell(("item", bare, node_id), agenda),
                log, next_id, depth + 1, act_name, utt, reading, kind, out, limit,
            )
            self._walk(agenda.tail, log, next_id, depth + 1, act_name, utt, reading, kind, out, limit)
            return
        if item.optional:
            bare = replace(item, optional=False)
            self._walk(
                _Cell(("item", bare, node_id), agenda.tail),
                log, next_id, depth + 1, act_name, utt, reading, kind, out, limit,
            )
            self._walk(agenda.tail, log, next_id, depth + 1, act_name, utt, reading, kind, out, limit)
            return
        if item.is_category:
            for op in self.grammar.producers.get(item.target, ()):
                if len(out) >= limit:
                    return
                if not self._constraints_hold(op):
                    continue
                node = next_id
                new_log = _Cell(("node", node, node_id, op.goal, op.name), log)
                new_agenda = _Cell(("done", node, op), agenda.tail)
                for sub in reversed(op.subgoals):
                    new_agenda = _Cell(("item", sub, node), new_agenda)
                self._walk(new_agenda, new_log, next_id + 1, depth + 1, act_name, utt, reading, kind, out, limit)
            return
        if item.target == act_name:
            leaf = ("leaf", next_id, node_id, act_name, utt, reading, kind)
            out.append(_PState(agenda.tail, _Cell(leaf, log), next_id + 1, node_id))

    def _trace(self, line: str) -> None:
        if self.trace_lines is not None:
            self.trace_lines.append(line)


def _build_tree(log) -> DialogueTree:
    entries = list(_stack_items(log))
    entries.reverse()
    nodes: dict[int, TreeNode] = {}
    root: TreeNode | None = None
    for entry in entries:
        if entry[0] == "node":
            _, node_id, parent, goal, op_name = entry
            node = TreeNode(goal=goal, operator=op_name, children=[])
            nodes[node_id] = node
            if parent == -1:
                root = node
            else:
                nodes[parent].children.append(node)
        elif entry[0] == "leaf":
            _, _leaf_id, parent, act, utt, reading, kind = entry
            nodes[parent].children.append(TreeLeaf(act, utt, reading, kind))
    assert root is not None
    return DialogueTree(root)

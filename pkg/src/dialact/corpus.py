"""Act-annotated dialogue corpora: inventories, dialogues, loading, splitting.

All values are immutable after construction and safe to share read-only
across threads.  File formats are line oriented so fixtures stay diffable:

* inventory file: one act name per line, optionally followed by the tags
  ``@anytime`` and ``@noise``.  Line order fixes act ids.
* corpus file: ``== <dialogue-id>`` opens a dialogue, then one utterance
  per line as ``<A|B> <TAB> <ACT>[+<ACT>...] <TAB> <optional text>``.
  Blank lines are skipped and ``#`` starts a comment.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from pathlib import Path

__all__ = [
    "ActLabel",
    "ActInventory",
    "Utterance",
    "Dialogue",
    "Corpus",
    "FormatError",
    "SPEAKERS",
    "load_inventory",
    "parse_inventory",
    "load_corpus",
    "parse_corpus",
    "dump_corpus",
    "save_corpus",
    "split_corpus",
]

SPEAKERS = ("A", "B")

_ACT_NAME = re.compile(r"[A-Z][A-Z_]*\Z")


class FormatError(ValueError):
    """Malformed inventory, corpus, grammar, compatibility, or lexicon file."""

    def __init__(self, message: str, source: str | None = None, line: int | None = None):
        where = ""
        if source is not None:
            where = f"{source}: " if line is None else f"{source}:{line}: "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)
        self.source = source
        self.line = line


@dataclass(frozen=True)
class ActLabel:
    """A dialogue-act symbol; ``id`` is its position in the inventory."""

    id: int
    name: str

    def __post_init__(self):
        if self.id < 0:
            raise ValueError(f"act id must be non-negative, got {self.id}")
        if not _ACT_NAME.match(self.name):
            raise ValueError(f"act name {self.name!r} must match [A-Z][A-Z_]*")

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class ActInventory:
    """Ordered act alphabet plus the anytime and social-noise subsets.

    Anytime acts may occur at any dialogue position and are handled by
    repair rather than by the dialogue grammar.  Social-noise acts (a
    subset of the anytime acts) are additionally skipped when the repair
    machinery looks for the effective predecessor of an act.
    """

    acts: tuple[ActLabel, ...]
    anytime_acts: frozenset[ActLabel] = frozenset()
    social_noise_acts: frozenset[ActLabel] = frozenset()

    def __post_init__(self):
        if not self.acts:
            raise ValueError("inventory must contain at least one act")
        names = [a.name for a in self.acts]
        if len(set(names)) != len(names):
            dup = sorted({n for n in names if names.count(n) > 1})
            raise ValueError(f"duplicate act name(s): {', '.join(dup)}")
        for pos, act in enumerate(self.acts):
            if act.id != pos:
                raise ValueError(f"act {act.name} has id {act.id}, expected {pos}")
        if not self.anytime_acts <= set(self.acts):
            raise ValueError("anytime acts must be a subset of the act list")
        if not self.social_noise_acts <= self.anytime_acts:
            raise ValueError("social-noise acts must be a subset of the anytime acts")

    def __len__(self) -> int:
        return len(self.acts)

    def __iter__(self):
        return iter(self.acts)

    def __contains__(self, item) -> bool:
        if isinstance(item, ActLabel):
            return item in self.acts
        return any(a.name == item for a in self.acts)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.acts)

    def get(self, name: str) -> ActLabel:
        for act in self.acts:
            if act.name == name:
                return act
        raise KeyError(f"unknown act {name!r}")


@dataclass(frozen=True)
class Utterance:
    """One speaker contribution with one or more act readings.

    A single reading is the normal case; additional readings are attached
    by the repair machinery or carried over from annotated corpora.
    """

    speaker: str
    acts: tuple[ActLabel, ...]
    text: str | None = None

    def __post_init__(self):
        if self.speaker not in SPEAKERS:
            raise ValueError(f"speaker must be one of {SPEAKERS}, got {self.speaker!r}")
        if not self.acts:
            raise ValueError("utterance must carry at least one act")


@dataclass(frozen=True)
class Dialogue:
    id: str
    utterances: tuple[Utterance, ...]

    def __post_init__(self):
        if not self.utterances:
            raise ValueError(f"dialogue {self.id!r} has no utterances")

    @property
    def n_acts(self) -> int:
        return sum(len(u.acts) for u in self.utterances)


@dataclass(frozen=True)
class Corpus:
    inventory: ActInventory
    dialogues: tuple[Dialogue, ...]

    def __post_init__(self):
        ids = [d.id for d in self.dialogues]
        if len(set(ids)) != len(ids):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise ValueError(f"duplicate dialogue id(s): {', '.join(dup)}")
        known = set(self.inventory.acts)
        for dialogue in self.dialogues:
            for utterance in dialogue.utterances:
                for act in utterance.acts:
                    if act not in known:
                        raise ValueError(
                            f"dialogue {dialogue.id!r} uses act {act.name!r} "
                            "that is not in the inventory"
                        )

    @property
    def n_dialogues(self) -> int:
        return len(self.dialogues)

    @property
    def n_utterances(self) -> int:
        return sum(len(d.utterances) for d in self.dialogues)

    @property
    def n_acts(self) -> int:
        return sum(d.n_acts for d in self.dialogues)


def parse_inventory(text: str, source: str = "<string>") -> ActInventory:
    """Parse inventory text; line order fixes act ids."""
    labels: list[ActLabel] = []
    seen: dict[str, int] = {}
    anytime: set[str] = set()
    noise: set[str] = set()
    noise_lines: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        name, tags = fields[0], fields[1:]
        if not _ACT_NAME.match(name):
            raise FormatError(f"invalid act name {name!r}", source, lineno)
        if name in seen:
            raise FormatError(
                f"duplicate act name {name!r} (first seen on line {seen[name]})",
                source,
                lineno,
            )
        seen[name] = lineno
        for tag in tags:
            if tag == "@anytime":
                anytime.add(name)
            elif tag == "@noise":
                noise.add(name)
                noise_lines[name] = lineno
            else:
                raise FormatError(f"unknown tag {tag!r}", source, lineno)
        labels.append(ActLabel(len(labels), name))
    if not labels:
        raise FormatError("inventory is empty", source)
    for name in sorted(noise - anytime):
        raise FormatError(
            f"social-noise act {name!r} must also be tagged @anytime",
            source,
            noise_lines[name],
        )
    by_name = {a.name: a for a in labels}
    return ActInventory(
        acts=tuple(labels),
        anytime_acts=frozenset(by_name[n] for n in anytime),
        social_noise_acts=frozenset(by_name[n] for n in noise),
    )


def load_inventory(path: str | Path) -> ActInventory:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"inventory file not found: {path}")
    return parse_inventory(path.read_text(encoding="utf-8"), source=str(path))


def parse_corpus(text: str, inventory: ActInventory, source: str = "<string>") -> Corpus:
    """Parse corpus text against an inventory; file order is preserved."""
    dialogues: list[Dialogue] = []
    current_id: str | None = None
    current_line = 0
    utterances: list[Utterance] = []

    def flush():
        nonlocal current_id, utterances
        if current_id is None:
            return
        if not utterances:
            raise FormatError(f"dialogue {current_id!r} is empty", source, current_line)
        dialogues.append(Dialogue(current_id, tuple(utterances)))
        current_id, utterances = None, []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\n")
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.startswith("=="):
            flush()
            current_id = stripped[2:].strip()
            current_line = lineno
            if not current_id:
                raise FormatError("dialogue header is missing an id", source, lineno)
            continue
        if current_id is None:
            raise FormatError("utterance before any dialogue header", source, lineno)
        parts = line.split("\t", 2)
        if len(parts) < 2:
            raise FormatError(
                "malformed utterance record (expected speaker <TAB> acts)",
                source,
                lineno,
            )
        speaker = parts[0].strip()
        if speaker not in SPEAKERS:
            raise FormatError(f"unknown speaker {speaker!r}", source, lineno)
        acts = []
        for name in parts[1].strip().split("+"):
            name = name.strip()
            try:
                acts.append(inventory.get(name))
            except KeyError:
                raise FormatError(
                    f"dialogue {current_id!r} uses unknown act {name!r}",
                    source,
                    lineno,
                ) from None
        text_field = parts[2].strip() if len(parts) > 2 else ""
        utterances.append(Utterance(speaker, tuple(acts), text_field or None))
    flush()
    return Corpus(inventory, tuple(dialogues))


def load_corpus(path: str | Path, inventory: ActInventory) -> Corpus:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"corpus file not found: {path}")
    return parse_corpus(path.read_text(encoding="utf-8"), inventory, source=str(path))


def dump_corpus(corpus: Corpus) -> str:
    """Serialize a corpus to the corpus text format (round-trip safe)."""
    lines: list[str] = []
    for dialogue in corpus.dialogues:
        lines.append(f"== {dialogue.id}")
        for utt in dialogue.utterances:
            record = f"{utt.speaker}\t{'+'.join(a.name for a in utt.acts)}"
            if utt.text:
                record += f"\t{utt.text}"
            lines.append(record)
        lines.append("")
    return "\n".join(lines)


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    Path(path).write_text(dump_corpus(corpus), encoding="utf-8")


def split_corpus(
    corpus: Corpus, held_out_fraction: float, seed: int
) -> tuple[Corpus, Corpus]:
    """Split by whole dialogues into (train, held_out), deterministically.

    Both parts are non-empty and each keeps the corpus order of its
    dialogues.  Splitting by dialogue avoids leaking within-dialogue
    context across the boundary.
    """
    if not 0.0 < held_out_fraction < 1.0:
        raise ValueError(f"held-out fraction must be in (0, 1), got {held_out_fraction}")
    n = corpus.n_dialogues
    if n < 2:
        raise ValueError("corpus must contain at least 2 dialogues to split")
    indices = list(range(n))
    random.Random(seed).shuffle(indices)
    n_held = round(n * held_out_fraction)
    n_held = max(1, min(n - 1, n_held))
    held_idx = set(indices[:n_held])
    train = tuple(d for i, d in enumerate(corpus.dialogues) if i not in held_idx)
    held = tuple(d for i, d in enumerate(corpus.dialogues) if i in held_idx)
    return Corpus(corpus.inventory, train), Corpus(corpus.inventory, held)

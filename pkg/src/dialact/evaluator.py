"""Prediction-quality evaluation: top-k hit rates and experiment reports.

Scoring is teacher forced: at every position the true next act is checked
against the model's top-k predictions and the context then advances with
the true act, never the predicted one.  End-of-dialogue transitions are
not prediction targets.  With ``skip_deviation_acts`` enabled, positions
whose true act is in the inventory's anytime set are neither scored nor
entered into the context history.

Machine-readable report records are tab separated, one row per k:
``experiment <TAB> k <TAB> hits <TAB> total <TAB> percent`` with the
percentage printed to two decimals.  Per-dialogue records add the
dialogue id after the experiment label.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Corpus, load_corpus, load_inventory, split_corpus
from .ngram import NGramModel, dialogue_elements, train_model

__all__ = [
    "HitRateReport",
    "PerDialogueReport",
    "VariantSpec",
    "ExperimentConfig",
    "hit_rate",
    "per_dialogue_hit_rates",
    "run_experiment",
    "DEFAULT_SEED",
]

DEFAULT_SEED = 13


@dataclass(frozen=True)
class HitRateReport:
    """Aggregate hit rates for a set of prediction depths."""

    label: str
    ks: tuple[int, ...]
    hits: dict[int, int]
    total: int

    def __post_init__(self):
        previous = -1
        for k in self.ks:
            if self.hits[k] < previous:
                raise ValueError("hit counts must be non-decreasing in k")
            previous = self.hits[k]

    def percent(self, k: int) -> float:
        if self.total == 0:
            return 0.0
        return 100.0 * self.hits[k] / self.total

    @property
    def rows(self) -> dict[int, float]:
        return {k: self.percent(k) for k in self.ks}

    def records(self) -> str:
        lines = [
            f"{self.label}\t{k}\t{self.hits[k]}\t{self.total}\t{self.percent(k):.2f}"
            for k in self.ks
        ]
        return "\n".join(lines) + "\n"

    def table(self) -> str:
        lines = [f"experiment: {self.label}", "  k  hits  total  percent"]
        for k in self.ks:
            lines.append(
                f"{k:>3}  {self.hits[k]:>4}  {self.total:>5}  {self.percent(k):6.2f}"
            )
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class PerDialogueReport:
    """Hit rate at a fixed prediction depth, per test dialogue."""

    label: str
    k: int
    entries: tuple[tuple[str, int, int], ...]  # (dialogue id, hits, total)

    def percent(self, dialogue_id: str) -> float:
        for did, hits, total in self.entries:
            if did == dialogue_id:
                return 100.0 * hits / total if total else 0.0
        raise KeyError(dialogue_id)

    def records(self) -> str:
        lines = []
        for did, hits, total in self.entries:
            pct = 100.0 * hits / total if total else 0.0
            lines.append(f"{self.label}\t{did}\t{self.k}\t{hits}\t{total}\t{pct:.2f}")
        return "\n".join(lines) + "\n"


def _dialogue_ranks(
    model: NGramModel, dialogue, k_max: int, skip_deviation_acts: bool
) -> list[int | None]:
    """Rank (1-based) of the true act within the top-k_max list, per scored
    position; None when the true act is not among them."""
    anytime = model.inventory.anytime_acts
    context: list = []
    ranks: list[int | None] = []
    for element in dialogue_elements(dialogue, model.speaker_conditioned):
        act = element[1] if model.speaker_conditioned else element
        if skip_deviation_acts and act in anytime:
            continue
        predictions = model.predict_top_k(context[-2:], k_max)
        rank = None
        for position, (candidate, _) in enumerate(predictions, start=1):
            if candidate == act:
                rank = position
                break
        ranks.append(rank)
        context.append(element)
    return ranks


def _hit_counts(ranks: list[int | None], ks: tuple[int, ...]) -> dict[int, int]:
    return {k: sum(1 for r in ranks if r is not None and r <= k) for k in ks}


def hit_rate(
    model: NGramModel,
    test: Corpus,
    k: int,
    skip_deviation_acts: bool = False,
    label: str = "eval",
) -> HitRateReport:
    """Aggregate top-1..top-k hit rates over a test corpus."""
    if test.n_dialogues == 0:
        raise ValueError("test corpus is empty")
    ks = tuple(range(1, k + 1))
    return _hit_rate_at(model, test, ks, skip_deviation_acts, label)


def _hit_rate_at(
    model: NGramModel,
    test: Corpus,
    ks: tuple[int, ...],
    skip_deviation_acts: bool,
    label: str,
) -> HitRateReport:
    k_max = max(ks)
    all_ranks: list[int | None] = []
    for dialogue in test.dialogues:
        all_ranks.extend(_dialogue_ranks(model, dialogue, k_max, skip_deviation_acts))
    return HitRateReport(
        label=label,
        ks=tuple(sorted(ks)),
        hits=_hit_counts(all_ranks, ks),
        total=len(all_ranks),
    )


def per_dialogue_hit_rates(
    model: NGramModel,
    test: Corpus,
    k: int,
    skip_deviation_acts: bool = False,
    label: str = "eval",
) -> PerDialogueReport:
    """Hit rate at depth k computed independently for every test dialogue."""
    if test.n_dialogues == 0:
        raise ValueError("test corpus is empty")
    entries = []
    for dialogue in test.dialogues:
        ranks = _dialogue_ranks(model, dialogue, k, skip_deviation_acts)
        hits = sum(1 for r in ranks if r is not None and r <= k)
        entries.append((dialogue.id, hits, len(ranks)))
    return PerDialogueReport(label=label, k=k, entries=tuple(entries))


@dataclass(frozen=True)
class VariantSpec:
    """One evaluation variant sharing the experiment's corpora and seed."""

    label: str
    skip_deviation_acts: bool = False
    speaker_conditioned: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    """A reproducible train-and-evaluate run.

    The training corpus is split once (by the seed) into a counting part
    and a held-out part for weight estimation; every variant is then
    scored on the test corpus at each configured prediction depth.
    """

    inventory_path: str
    train_path: str
    test_path: str
    ks: tuple[int, ...] = (1, 2, 3)
    held_out_fraction: float = 0.1
    seed: int = DEFAULT_SEED
    variants: tuple[VariantSpec, ...] = (VariantSpec("eval"),)

    def __post_init__(self):
        if not self.ks or any(k < 1 for k in self.ks):
            raise ValueError("ks must be positive integers")
        if not self.variants:
            raise ValueError("at least one variant is required")


def run_experiment(config: ExperimentConfig) -> list[HitRateReport]:
    """Train per the config and emit one report per variant."""
    inventory = load_inventory(config.inventory_path)
    train_corpus = load_corpus(config.train_path, inventory)
    test_corpus = load_corpus(config.test_path, inventory)
    counting, held_out = split_corpus(
        train_corpus, config.held_out_fraction, config.seed
    )
    models: dict[bool, NGramModel] = {}
    reports = []
    for variant in config.variants:
        model = models.get(variant.speaker_conditioned)
        if model is None:
            model = train_model(
                counting,
                held_out=held_out,
                speaker_conditioned=variant.speaker_conditioned,
            )
            models[variant.speaker_conditioned] = model
        reports.append(
            _hit_rate_at(
                model,
                test_corpus,
                tuple(config.ks),
                variant.skip_deviation_acts,
                variant.label,
            )
        )
    return reports


def write_reports(reports: list[HitRateReport], path: str | Path) -> None:
    Path(path).write_text("".join(r.records() for r in reports), encoding="utf-8")

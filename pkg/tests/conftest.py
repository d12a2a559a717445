"""Shared fixtures and synthetic-corpus builders for the test suite."""

from __future__ import annotations

import random

import pytest

from dialact.corpus import (
    ActInventory,
    ActLabel,
    Corpus,
    Dialogue,
    Utterance,
    load_inventory,
)
from dialact.ngram import (
    CountTable,
    InterpolationWeights,
    NGramModel,
    load_model,
)
from dialact.planner import load_compatibility, load_grammar
from dialact.resources import bundled_path


def make_inventory(n: int, anytime: tuple[str, ...] = (), noise: tuple[str, ...] = ()) -> ActInventory:
    """Inventory of n acts named AA, AB, ... with optional tag subsets."""
    names = []
    for i in range(n):
        hi, lo = divmod(i, 26)
        names.append("A" * (hi + 1) + chr(65 + lo))
    labels = tuple(ActLabel(i, name) for i, name in enumerate(names))
    by_name = {a.name: a for a in labels}
    return ActInventory(
        labels,
        anytime_acts=frozenset(by_name[name] for name in anytime),
        social_noise_acts=frozenset(by_name[name] for name in noise),
    )


def make_dialogue(inventory: ActInventory, names, dialogue_id="d0", speakers=None) -> Dialogue:
    utterances = []
    for i, name in enumerate(names):
        speaker = speakers[i] if speakers else "AB"[i % 2]
        utterances.append(Utterance(speaker, (inventory.get(name),)))
    return Dialogue(dialogue_id, tuple(utterances))


def uniform_random_corpus(
    inventory: ActInventory,
    n_dialogues: int,
    length: tuple[int, int],
    seed: int,
    acts=None,
    id_prefix: str = "u",
) -> Corpus:
    """Dialogues of i.i.d. uniformly drawn acts, alternating speakers."""
    rng = random.Random(seed)
    pool = list(acts) if acts else list(inventory.acts)
    dialogues = []
    for d in range(n_dialogues):
        n = rng.randint(*length)
        utts = tuple(
            Utterance("AB"[i % 2], (rng.choice(pool),)) for i in range(n)
        )
        dialogues.append(Dialogue(f"{id_prefix}{seed}-{d}", utts))
    return Corpus(inventory, tuple(dialogues))


def peaked_trigram_source(
    inventory: ActInventory,
    seed: int,
    *,
    acts=None,
    end_weight: int = 8,
    profile: tuple[int, ...] = (70, 15, 7),
) -> NGramModel:
    """A known trigram source with one preferred continuation per context.

    Rows are integer pseudo-counts over every reachable context, so the
    true conditional tables are exact rationals and the model doubles as
    the Bayes-optimal predictor for data it generated.
    """
    rng = random.Random(seed)
    pool = [a.name for a in (acts or inventory.acts)]
    k = len(pool)
    tri: dict = {}

    def fill_row(c1, c2, allow_end):
        order = rng.sample(range(k), k)
        for rank, weight in enumerate(profile[: min(len(profile), k)]):
            tri[(c1, c2, pool[order[rank]])] = weight
        if allow_end:
            tri[(c1, c2, "<END>")] = end_weight

    fill_row("<BEGIN>", "<BEGIN>", allow_end=False)
    for a in pool:
        fill_row("<BEGIN>", a, allow_end=True)
    for a in pool:
        for b in pool:
            fill_row(a, b, allow_end=True)
    counts = CountTable.from_name_counts(inventory, tri=tri, derive_lower=True)
    return NGramModel(inventory, counts, InterpolationWeights(0.0, 0.0, 1.0))


def deterministic_trigram_source(inventory: ActInventory, seed: int) -> NGramModel:
    """Source whose next act is a deterministic function of the last two.

    The function mixes both context positions, so the bigram alone cannot
    predict the continuation; dialogues only end by the sampler's length
    cap.
    """
    rng = random.Random(seed)
    pool = [a.name for a in inventory.acts]
    k = len(pool)
    mult = rng.randrange(1, k)
    offset = rng.randrange(k)
    tri: dict = {}
    for a in pool:
        tri[("<BEGIN>", "<BEGIN>", a)] = 1
    for i, a in enumerate(pool):
        tri[("<BEGIN>", a, pool[(3 * i + offset) % k])] = 1
    for i, a in enumerate(pool):
        for j, b in enumerate(pool):
            tri[(a, b, pool[(i + mult * j + offset) % k])] = 1
    counts = CountTable.from_name_counts(inventory, tri=tri, derive_lower=True)
    return NGramModel(inventory, counts, InterpolationWeights(0.0, 0.0, 1.0))


def uniform_event_model(k: int) -> NGramModel:
    """A model where every prediction factor, end transition included, is 1/k.

    Each act context continues with the k-1 other acts or the end marker,
    all equally likely; the begin context fans out over all k acts.  Test
    dialogues must avoid immediate repetition.
    """
    inventory = make_inventory(k)
    names = inventory.names
    bi: dict = {}
    for a in names:
        bi[("<BEGIN>", a)] = 1
        bi[(a, "<END>")] = 1
        for b in names:
            if b != a:
                bi[(a, b)] = 1
    uni: dict = {}
    for (_, ev), n in bi.items():
        uni[ev] = uni.get(ev, 0) + n
    counts = CountTable.from_name_counts(inventory, uni=uni, bi=bi)
    return NGramModel(inventory, counts, InterpolationWeights(0.0, 1.0, 0.0))


def no_repeat_corpus(model: NGramModel, n_dialogues: int, length: int, seed: int) -> Corpus:
    """Dialogues over the model's inventory with no immediate repeats."""
    rng = random.Random(seed)
    acts = model.inventory.acts
    dialogues = []
    for d in range(n_dialogues):
        chosen = [rng.choice(acts)]
        for _ in range(length - 1):
            options = [a for a in acts if a != chosen[-1]]
            chosen.append(rng.choice(options))
        utts = tuple(Utterance("AB"[i % 2], (a,)) for i, a in enumerate(chosen))
        dialogues.append(Dialogue(f"nr{seed}-{d}", utts))
    return Corpus(model.inventory, tuple(dialogues))


def speaker_dependent_corpus(
    inventory: ActInventory, n_dialogues: int, length: int, seed: int
) -> Corpus:
    """The next act is determined by the previous act and whether the
    previous step changed speakers; speakers are drawn at random."""
    rng = random.Random(seed)
    acts = inventory.acts
    k = len(acts)
    dialogues = []
    for d in range(n_dialogues):
        utts = []
        act = rng.choice(acts)
        speaker = rng.choice("AB")
        utts.append(Utterance(speaker, (act,)))
        prev_changed = False
        for _ in range(length - 1):
            shift = 2 if prev_changed else 1
            act = acts[(act.id + shift) % k]
            next_speaker = rng.choice("AB")
            prev_changed = next_speaker != speaker
            speaker = next_speaker
            utts.append(Utterance(speaker, (act,)))
        dialogues.append(Dialogue(f"sp{seed}-{d}", tuple(utts)))
    return Corpus(inventory, tuple(dialogues))


@pytest.fixture(scope="session")
def default_inventory() -> ActInventory:
    return load_inventory(bundled_path("inventory_default.txt"))


@pytest.fixture(scope="session")
def fixture_model() -> NGramModel:
    return load_model(bundled_path("repair_fixture.model"))


@pytest.fixture(scope="session")
def default_grammar(default_inventory):
    compatibility = load_compatibility(
        bundled_path("compatibility_default.txt"), default_inventory
    )
    return load_grammar(
        bundled_path("grammar_appointment.txt"), default_inventory, compatibility
    )

"""Interpolated act-sequence statistics: counting, smoothing, prediction.

Counting pads every dialogue with two begin markers in front and one end
marker behind, and records only n-grams whose final element is a
predictable event (an act or the end marker).  Every observed context row
is therefore a proper conditional distribution over events.

Smoothing mixes unigram, bigram and trigram relative frequencies with
three non-negative weights summing to one.  Two boundary rules keep every
context normalized:

* the end marker carries no unigram mass (the unigram distribution ranges
  over acts only; end transitions are explained by the conditional orders);
* when a higher-order context was never observed, its weight is
  renormalized away instead of leaking probability mass.  For observed
  contexts the result is exactly the plain three-term mixture.

With speaker conditioning enabled, every sequence element is the pair
(speaker-changed bit, act); the bit of the first utterance of a dialogue
is 0.  Predictions marginalize over the bit of the predicted element, so
conditioning informs the model through the context only.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from pathlib import Path

from .corpus import ActInventory, ActLabel, Corpus, Dialogue, Utterance, parse_inventory

__all__ = [
    "BEGIN",
    "END",
    "CountTable",
    "InterpolationWeights",
    "NGramModel",
    "EstimationError",
    "train_counts",
    "relative_frequency",
    "estimate_weights",
    "train_model",
    "dialogue_elements",
    "dump_model",
    "save_model",
    "load_model",
    "sample_corpus",
]

BEGIN = "<BEGIN>"
END = "<END>"


class EstimationError(RuntimeError):
    """Raised when interpolation weights cannot be estimated."""


def dialogue_elements(dialogue: Dialogue, speaker_conditioned: bool) -> list:
    """Flatten a dialogue into sequence elements.

    Unconditioned: one ActLabel per annotated act.  Conditioned: pairs
    (changed, act) where ``changed`` marks the first reading of an
    utterance whose speaker differs from the previous utterance's.
    """
    elements = []
    prev_speaker = None
    for utt in dialogue.utterances:
        for j, act in enumerate(utt.acts):
            if speaker_conditioned:
                changed = j == 0 and prev_speaker is not None and utt.speaker != prev_speaker
                elements.append((changed, act))
            else:
                elements.append(act)
        prev_speaker = utt.speaker
    return elements


@dataclass(frozen=True)
class CountTable:
    """Unigram, bigram, and trigram event counts over encoded tokens.

    ``uni``/``bi``/``tri`` map event-final token tuples to counts;
    ``bi_ctx``/``tri_ctx`` hold the derived context totals.  ``total`` is
    the number of act events (end markers excluded), which is the unigram
    denominator.
    """

    inventory: ActInventory
    speaker_conditioned: bool
    uni: dict
    bi: dict
    tri: dict
    bi_ctx: dict
    tri_ctx: dict
    total: int

    # Token layout: acts (or bit/act pairs) first, then END, then BEGIN.
    @property
    def _n_kinds(self) -> int:
        k = len(self.inventory.acts)
        return 2 * k if self.speaker_conditioned else k

    @property
    def end_token(self) -> int:
        return self._n_kinds

    @property
    def begin_token(self) -> int:
        return self._n_kinds + 1

    def _act_id(self, item) -> int:
        if isinstance(item, ActLabel):
            return self.inventory.get(item.name).id
        if isinstance(item, str):
            return self.inventory.get(item).id
        raise TypeError(f"cannot interpret {item!r} as an act")

    def event_tokens(self, item) -> tuple[int, ...]:
        """Tokens an event query stands for; bare acts on a conditioned
        table expand to both speaker-bit variants (marginalization)."""
        if item == END:
            return (self.end_token,)
        if item == BEGIN:
            raise ValueError("the begin marker is never a predictable event")
        if isinstance(item, tuple):
            if not self.speaker_conditioned:
                raise ValueError("model is not speaker conditioned; pass a bare act")
            changed, act = item
            base = self._act_id(act)
            return (int(bool(changed)) * len(self.inventory.acts) + base,)
        base = self._act_id(item)
        if self.speaker_conditioned:
            return (base, len(self.inventory.acts) + base)
        return (base,)

    def context_token(self, item) -> int:
        if item == BEGIN:
            return self.begin_token
        if item == END:
            raise ValueError("the end marker never occurs as context")
        if isinstance(item, tuple):
            if not self.speaker_conditioned:
                raise ValueError("model is not speaker conditioned; pass a bare act")
            changed, act = item
            return int(bool(changed)) * len(self.inventory.acts) + self._act_id(act)
        if self.speaker_conditioned:
            raise ValueError(
                "speaker-conditioned context elements must be (changed, act) pairs"
            )
        return self._act_id(item)

    def encode_history(self, history) -> tuple[int, int]:
        """Encode the last two context elements, left-padding with BEGIN."""
        items = list(history)[-2:]
        while len(items) < 2:
            items.insert(0, BEGIN)
        return self.context_token(items[0]), self.context_token(items[1])

    def encode_elements(self, elements) -> list[int]:
        return [self.context_token(e) for e in elements]

    def spell(self, token: int) -> str:
        if token == self.end_token:
            return END
        if token == self.begin_token:
            return BEGIN
        k = len(self.inventory.acts)
        if self.speaker_conditioned:
            bit, base = divmod(token, k)
            return f"{bit}:{self.inventory.acts[base].name}"
        return self.inventory.acts[token].name

    def _parse_token(self, text: str) -> int:
        if text == END:
            return self.end_token
        if text == BEGIN:
            return self.begin_token
        if self.speaker_conditioned:
            bit, _, name = text.partition(":")
            if bit not in ("0", "1") or not name:
                raise ValueError(f"bad conditioned token {text!r}")
            return int(bit) * len(self.inventory.acts) + self.inventory.get(name).id
        return self.inventory.get(text).id

    def validate(self) -> None:
        """Count-consistency checks run after training and after loading."""
        for table in (self.uni, self.bi, self.tri):
            for key, count in table.items():
                if count < 0:
                    raise ValueError(f"negative count for {key}")
        for (c1, c2, ev), count in self.tri.items():
            if count > self.bi.get((c2, ev), 0):
                raise ValueError(
                    f"trigram count {count} exceeds the bigram count of its "
                    f"suffix ({self.spell(c2)}, {self.spell(ev)})"
                )
            if count > self.tri_ctx.get((c1, c2), 0):
                raise ValueError("trigram count exceeds its context total")
        for (ctx, ev), count in self.bi.items():
            if count > self.uni.get(ev, 0):
                raise ValueError(
                    f"bigram count {count} exceeds the unigram count of "
                    f"{self.spell(ev)}"
                )
            if count > self.bi_ctx.get(ctx, 0):
                raise ValueError("bigram count exceeds its context total")
        expected_total = sum(
            c for tok, c in self.uni.items() if tok != self.end_token
        )
        if self.total != expected_total:
            raise ValueError(
                f"total {self.total} does not match act event counts {expected_total}"
            )

    @classmethod
    def from_name_counts(
        cls,
        inventory: ActInventory,
        uni: dict | None = None,
        bi: dict | None = None,
        tri: dict | None = None,
        *,
        speaker_conditioned: bool = False,
        derive_lower: bool = False,
    ) -> "CountTable":
        """Build a table from counts keyed by spelled token names.

        With ``derive_lower`` the bigram and unigram tables are computed
        as marginals of the trigram table, which keeps them consistent by
        construction (useful for synthetic sources).
        """
        probe = cls(inventory, speaker_conditioned, {}, {}, {}, {}, {}, 0)
        tri_enc = {
            (probe._parse_token(a), probe._parse_token(b), probe._parse_token(c)): n
            for (a, b, c), n in (tri or {}).items()
        }
        if derive_lower:
            bi_enc: dict = {}
            uni_enc: dict = {}
            for (_, c2, ev), n in tri_enc.items():
                bi_enc[(c2, ev)] = bi_enc.get((c2, ev), 0) + n
                uni_enc[ev] = uni_enc.get(ev, 0) + n
        else:
            bi_enc = {
                (probe._parse_token(a), probe._parse_token(b)): n
                for (a, b), n in (bi or {}).items()
            }
            uni_enc = {probe._parse_token(a): n for a, n in (uni or {}).items()}
        table = cls(
            inventory=inventory,
            speaker_conditioned=speaker_conditioned,
            uni=uni_enc,
            bi=bi_enc,
            tri=tri_enc,
            bi_ctx=_context_totals(bi_enc, 1),
            tri_ctx=_context_totals(tri_enc, 2),
            total=sum(c for tok, c in uni_enc.items() if tok != probe.end_token),
        )
        table.validate()
        return table


def _context_totals(table: dict, ctx_len: int) -> dict:
    totals: dict = {}
    for key, count in table.items():
        ctx = key[0] if ctx_len == 1 else key[:ctx_len]
        totals[ctx] = totals.get(ctx, 0) + count
    return totals


def train_counts(train: Corpus, speaker_conditioned: bool = False) -> CountTable:
    """Accumulate padded event counts over all dialogues of a corpus."""
    if train.n_dialogues == 0:
        raise ValueError("cannot train on an empty corpus")
    table = CountTable(
        inventory=train.inventory,
        speaker_conditioned=speaker_conditioned,
        uni={},
        bi={},
        tri={},
        bi_ctx={},
        tri_ctx={},
        total=0,
    )
    uni: dict = {}
    bi: dict = {}
    tri: dict = {}
    begin, end = table.begin_token, table.end_token
    for dialogue in train.dialogues:
        elements = dialogue_elements(dialogue, speaker_conditioned)
        tokens = [begin, begin] + table.encode_elements(elements) + [end]
        for i in range(2, len(tokens)):
            ev = tokens[i]
            uni[ev] = uni.get(ev, 0) + 1
            bi_key = (tokens[i - 1], ev)
            bi[bi_key] = bi.get(bi_key, 0) + 1
            tri_key = (tokens[i - 2], tokens[i - 1], ev)
            tri[tri_key] = tri.get(tri_key, 0) + 1
    result = CountTable(
        inventory=train.inventory,
        speaker_conditioned=speaker_conditioned,
        uni=uni,
        bi=bi,
        tri=tri,
        bi_ctx=_context_totals(bi, 1),
        tri_ctx=_context_totals(tri, 2),
        total=sum(c for tok, c in uni.items() if tok != end),
    )
    result.validate()
    return result


def relative_frequency(counts: CountTable, act, history=()) -> float:
    """Relative frequency of ``act`` after a history of 0..2 elements.

    Returns 0.0 when the history was never observed (zero denominator);
    the interpolation's lower orders absorb such contexts.  The end marker
    has relative frequency 0 at order one by the boundary convention.
    """
    tokens = counts.event_tokens(act)
    history = tuple(history)
    if len(history) == 0:
        if counts.total == 0 or tokens == (counts.end_token,):
            return 0.0
        return sum(counts.uni.get(t, 0) for t in tokens) / counts.total
    if len(history) == 1:
        ctx = counts.context_token(history[0])
        denom = counts.bi_ctx.get(ctx, 0)
        if denom == 0:
            return 0.0
        return sum(counts.bi.get((ctx, t), 0) for t in tokens) / denom
    if len(history) == 2:
        ctx = (counts.context_token(history[0]), counts.context_token(history[1]))
        denom = counts.tri_ctx.get(ctx, 0)
        if denom == 0:
            return 0.0
        return sum(counts.tri.get((ctx[0], ctx[1], t), 0) for t in tokens) / denom
    raise ValueError(f"history must have length 0..2, got {len(history)}")


@dataclass(frozen=True)
class InterpolationWeights:
    """Mixture weights for the unigram, bigram, and trigram terms."""

    unigram: float
    bigram: float
    trigram: float

    def __post_init__(self):
        for value in (self.unigram, self.bigram, self.trigram):
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"weight {value} outside [0, 1]")
        if abs(self.unigram + self.bigram + self.trigram - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1 within 1e-12")

    @classmethod
    def uniform(cls) -> "InterpolationWeights":
        return cls(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.unigram, self.bigram, self.trigram)


@dataclass(frozen=True)
class NGramModel:
    """Trained, immutable act-sequence model; methods are pure functions."""

    inventory: ActInventory
    counts: CountTable
    weights: InterpolationWeights

    def __post_init__(self):
        if self.counts.inventory is not self.inventory and (
            self.counts.inventory.names != self.inventory.names
        ):
            raise ValueError("count table was built against a different inventory")

    @property
    def speaker_conditioned(self) -> bool:
        return self.counts.speaker_conditioned

    def _interpolated(self, event_token: int, ctx: tuple[int, int]) -> float:
        c = self.counts
        w1, w2, w3 = self.weights.as_tuple()
        t1, t2 = ctx
        f1 = 0.0
        if event_token != c.end_token and c.total:
            f1 = c.uni.get(event_token, 0) / c.total
        bi_total = c.bi_ctx.get(t2, 0)
        f2 = c.bi.get((t2, event_token), 0) / bi_total if bi_total else 0.0
        tri_total = c.tri_ctx.get((t1, t2), 0)
        f3 = c.tri.get((t1, t2, event_token), 0) / tri_total if tri_total else 0.0
        # Weight mass on unseen context orders is renormalized away so the
        # event distribution sums to one for every history.
        denom = w1 + (w2 if bi_total else 0.0) + (w3 if tri_total else 0.0)
        if denom == 0.0:
            return 0.0
        return (w1 * f1 + w2 * f2 + w3 * f3) / denom

    def smoothed_prob(self, act, history=()) -> float:
        """Interpolated probability of ``act`` (or END) after ``history``.

        ``history`` holds the last up to two context elements and is
        padded with begin markers near the dialogue start.  Bare acts on a
        speaker-conditioned model marginalize over the speaker bit.
        """
        ctx = self.counts.encode_history(history)
        return sum(self._interpolated(t, ctx) for t in self.counts.event_tokens(act))

    def transition_prob(self, act, prev, *, raw: bool = False) -> float:
        """Bigram-level transition probability used for repair bridging.

        The trigram term is dropped because an insertion has no settled
        two-element context.  ``raw`` switches to the plain bigram relative
        frequency.  Both ``act`` and ``prev`` may be bare acts even on a
        speaker-conditioned model; contexts then pool both bit variants.
        """
        c = self.counts
        targets = c.event_tokens(act)
        if isinstance(prev, tuple) or not c.speaker_conditioned:
            contexts = [c.context_token(prev)]
        else:
            base = c._act_id(prev)
            contexts = [base, len(c.inventory.acts) + base]
        bi_total = sum(c.bi_ctx.get(t, 0) for t in contexts)
        f2 = 0.0
        if bi_total:
            f2 = (
                sum(c.bi.get((t, ev), 0) for t in contexts for ev in targets)
                / bi_total
            )
        if raw:
            return f2
        w1, w2, _ = self.weights.as_tuple()
        f1 = 0.0
        if c.total and c.end_token not in targets:
            f1 = sum(c.uni.get(ev, 0) for ev in targets) / c.total
        denom = w1 + (w2 if bi_total else 0.0)
        if denom == 0.0:
            return 0.0
        return (w1 * f1 + w2 * f2) / denom

    def predict_top_k(self, history, k: int) -> list[tuple[ActLabel, float]]:
        """The k most probable follow-up acts, descending, ties by act id.

        Boundary markers are never returned; k is capped at the inventory
        size.  On conditioned models the probabilities marginalize over
        the speaker bit of the predicted act.
        """
        if k < 1:
            raise ValueError(f"k must be positive, got {k}")
        ctx = self.counts.encode_history(history)
        scored = []
        for act in self.inventory.acts:
            p = sum(self._interpolated(t, ctx) for t in self.counts.event_tokens(act))
            scored.append((act, p))
        scored.sort(key=lambda pair: (-pair[1], pair[0].id))
        return scored[: min(k, len(self.inventory.acts))]

    def sequence_log_factors(self, dialogue: Dialogue) -> list[float]:
        """Per-position log probabilities (nats), end transition included."""
        c = self.counts
        elements = dialogue_elements(dialogue, self.speaker_conditioned)
        tokens = [c.begin_token, c.begin_token] + c.encode_elements(elements)
        tokens.append(c.end_token)
        factors = []
        for i in range(2, len(tokens)):
            p = self._interpolated(tokens[i], (tokens[i - 2], tokens[i - 1]))
            factors.append(math.log(p) if p > 0.0 else -math.inf)
        return factors

    def sequence_log_prob(self, dialogue: Dialogue) -> float:
        return sum(self.sequence_log_factors(dialogue))

    def perplexity(self, test: Corpus) -> float:
        """exp of the negative mean log probability per event.

        Events are the annotated acts plus one end transition per
        dialogue.  Any zero-probability factor yields ``math.inf``.
        """
        if test.n_dialogues == 0:
            raise ValueError("cannot compute perplexity on an empty corpus")
        total_lp = 0.0
        n_events = 0
        for dialogue in test.dialogues:
            total_lp += self.sequence_log_prob(dialogue)
            n_events += len(dialogue_elements(dialogue, self.speaker_conditioned)) + 1
        if math.isinf(total_lp):
            return math.inf
        return math.exp(-total_lp / n_events)


def _frequency_triples(counts: CountTable, corpus: Corpus) -> list[tuple[float, float, float]]:
    """Per-position (unigram, bigram, trigram) frequencies on held-out data.

    Only act events are used.  End transitions carry no unigram mass by
    the boundary convention, so including them would push weight toward
    the higher orders no matter how context-free the data is; the weights
    exist to smooth next-act prediction.  Positions where all three
    frequencies are zero carry no information about the mixture (their
    likelihood is zero for every weighting) and are excluded as well.
    """
    triples = []
    begin, end = counts.begin_token, counts.end_token
    for dialogue in corpus.dialogues:
        elements = dialogue_elements(dialogue, counts.speaker_conditioned)
        tokens = [begin, begin] + counts.encode_elements(elements)
        for i in range(2, len(tokens)):
            ev = tokens[i]
            f1 = counts.uni.get(ev, 0) / counts.total if counts.total else 0.0
            bt = counts.bi_ctx.get(tokens[i - 1], 0)
            f2 = counts.bi.get((tokens[i - 1], ev), 0) / bt if bt else 0.0
            tt = counts.tri_ctx.get((tokens[i - 2], tokens[i - 1]), 0)
            f3 = counts.tri.get((tokens[i - 2], tokens[i - 1], ev), 0) / tt if tt else 0.0
            if f1 or f2 or f3:
                triples.append((f1, f2, f3))
    return triples


def estimate_weights(
    counts: CountTable,
    held_out: Corpus,
    *,
    tol: float = 1e-6,
    max_iter: int = 100,
    return_history: bool = False,
):
    """Estimate mixture weights by expectation maximization on held-out data.

    Starts from the uniform mixture and reestimates responsibility-weighted
    averages until the held-out log likelihood improves by less than
    ``tol`` nats or ``max_iter`` iterations have run.  The log likelihood
    is non-decreasing across iterations.
    """
    if held_out.n_dialogues == 0:
        raise ValueError("held-out corpus is empty")
    triples = _frequency_triples(counts, held_out)
    if not triples:
        raise EstimationError(
            "held-out data shares no events with the training counts at any order"
        )
    w = [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]
    history: list[float] = []
    for _ in range(max_iter):
        resp = [0.0, 0.0, 0.0]
        ll = 0.0
        for f1, f2, f3 in triples:
            mix = w[0] * f1 + w[1] * f2 + w[2] * f3
            ll += math.log(mix)
            resp[0] += w[0] * f1 / mix
            resp[1] += w[1] * f2 / mix
            resp[2] += w[2] * f3 / mix
        if history and ll < history[-1] - 1e-9:
            raise AssertionError("EM log likelihood decreased")
        converged = bool(history) and ll - history[-1] < tol
        history.append(ll)
        if converged:
            break
        total = resp[0] + resp[1] + resp[2]
        w = [r / total for r in resp]
    weights = InterpolationWeights(*w)
    if return_history:
        return weights, tuple(history)
    return weights


def train_model(
    train: Corpus,
    *,
    held_out: Corpus | None = None,
    weights: InterpolationWeights | None = None,
    speaker_conditioned: bool = False,
) -> NGramModel:
    """Count a corpus and attach weights (estimated or given; uniform default)."""
    counts = train_counts(train, speaker_conditioned)
    if held_out is not None:
        weights = estimate_weights(counts, held_out)
    elif weights is None:
        weights = InterpolationWeights.uniform()
    return NGramModel(train.inventory, counts, weights)


_MODEL_HEADER = "dialact-model 1"


def dump_model(model: NGramModel) -> str:
    """Serialize a model to the versioned text format (stable ordering)."""
    c = model.counts
    lines = [_MODEL_HEADER]
    lines.append(f"conditioned {int(c.speaker_conditioned)}")
    for act in model.inventory.acts:
        tags = []
        if act in model.inventory.anytime_acts:
            tags.append("@anytime")
        if act in model.inventory.social_noise_acts:
            tags.append("@noise")
        lines.append(" ".join(["act", act.name] + tags))
    w = model.weights
    lines.append(
        f"weights {w.unigram:.17g} {w.bigram:.17g} {w.trigram:.17g}"
    )
    for tok, n in sorted(c.uni.items(), key=lambda kv: c.spell(kv[0])):
        lines.append(f"count1 {c.spell(tok)} {n}")
    for (a, b), n in sorted(c.bi.items(), key=lambda kv: (c.spell(kv[0][0]), c.spell(kv[0][1]))):
        lines.append(f"count2 {c.spell(a)} {c.spell(b)} {n}")
    for (a, b, e), n in sorted(
        c.tri.items(), key=lambda kv: (c.spell(kv[0][0]), c.spell(kv[0][1]), c.spell(kv[0][2]))
    ):
        lines.append(f"count3 {c.spell(a)} {c.spell(b)} {c.spell(e)} {n}")
    return "\n".join(lines) + "\n"


def save_model(model: NGramModel, path: str | Path) -> None:
    Path(path).write_text(dump_model(model), encoding="utf-8")


def load_model(path: str | Path) -> NGramModel:
    """Load a model file; the inventory is embedded in the file."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"model file not found: {path}")
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != _MODEL_HEADER:
        raise ValueError(f"{path}: not a dialact model file")
    conditioned = False
    inventory_lines: list[str] = []
    weights: InterpolationWeights | None = None
    raw_counts: list[tuple[int, tuple[str, ...], int]] = []
    for lineno, line in enumerate(lines[1:], start=2):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        kind = fields[0]
        if kind == "conditioned":
            conditioned = fields[1] == "1"
        elif kind == "act":
            inventory_lines.append(" ".join(fields[1:]))
        elif kind == "weights":
            weights = InterpolationWeights(*(float(x) for x in fields[1:4]))
        elif kind in ("count1", "count2", "count3"):
            order = int(kind[-1])
            if len(fields) != order + 2:
                raise ValueError(f"{path}:{lineno}: malformed {kind} record")
            raw_counts.append((order, tuple(fields[1:-1]), int(fields[-1])))
        else:
            raise ValueError(f"{path}:{lineno}: unknown record {kind!r}")
    if weights is None:
        raise ValueError(f"{path}: missing weights record")
    inventory = parse_inventory("\n".join(inventory_lines), source=str(path))
    uni = {key[0]: n for order, key, n in raw_counts if order == 1}
    bi = {key: n for order, key, n in raw_counts if order == 2}
    tri = {key: n for order, key, n in raw_counts if order == 3}
    counts = CountTable.from_name_counts(
        inventory, uni, bi, tri, speaker_conditioned=conditioned
    )
    return NGramModel(inventory, counts, weights)


def sample_corpus(
    model: NGramModel,
    n_dialogues: int,
    *,
    deviation_rate: float = 0.0,
    seed: int = 0,
    max_len: int = 80,
    id_prefix: str = "gen",
) -> Corpus:
    """Sample dialogues from a model's smoothed trigram distribution.

    ``deviation_rate`` injects uniformly chosen anytime acts between
    sampled positions without advancing the model context.  Sampling is
    deterministic for a fixed seed.
    """
    if not 0.0 <= deviation_rate <= 1.0:
        raise ValueError(f"deviation rate must be in [0, 1], got {deviation_rate}")
    if deviation_rate > 0.0 and not model.inventory.anytime_acts:
        raise ValueError("deviation rate given but the inventory has no anytime acts")
    rng = random.Random(seed)
    c = model.counts
    anytime = sorted(model.inventory.anytime_acts, key=lambda a: a.id)
    act_events = [
        (tok, act) for act in model.inventory.acts for tok in c.event_tokens(act)
    ]
    dialogues = []
    for d in range(n_dialogues):
        tokens = [c.begin_token, c.begin_token]
        utterances: list[Utterance] = []
        n_real = 0
        speaker = 0

        while n_real < max_len:
            if deviation_rate and rng.random() < deviation_rate:
                if utterances:
                    speaker = 1 - speaker
                utterances.append(Utterance("AB"[speaker], (rng.choice(anytime),)))
                continue
            events = list(act_events)
            probs = [
                model._interpolated(tok, (tokens[-2], tokens[-1])) for tok, _ in events
            ]
            if n_real > 0:
                events.append((c.end_token, None))
                probs.append(model._interpolated(c.end_token, (tokens[-2], tokens[-1])))
            total = sum(probs)
            if total <= 0.0:
                break
            pick = rng.random() * total
            acc = 0.0
            chosen = events[-1]
            for event, p in zip(events, probs):
                acc += p
                if pick <= acc:
                    chosen = event
                    break
            tok, act = chosen
            if act is None:
                break
            if model.speaker_conditioned:
                changed = tok >= len(model.inventory.acts)
                if changed and utterances:
                    speaker = 1 - speaker
            elif utterances:
                speaker = 1 - speaker
            utterances.append(Utterance("AB"[speaker], (act,)))
            tokens.append(tok)
            n_real += 1
        if not utterances:
            # Degenerate model with no mass anywhere; keep the dialogue well formed.
            utterances.append(Utterance("A", (model.inventory.acts[0],)))
        dialogues.append(Dialogue(f"{id_prefix}-{d:04d}", tuple(utterances)))
    return Corpus(model.inventory, tuple(dialogues))

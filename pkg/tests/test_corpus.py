"""Tests for inventory and corpus loading, serialization, and splitting."""

import pytest
from hypothesis import given, settings, strategies as st

from dialact.corpus import (
    ActInventory,
    ActLabel,
    Corpus,
    Dialogue,
    FormatError,
    Utterance,
    dump_corpus,
    load_corpus,
    load_inventory,
    parse_corpus,
    parse_inventory,
    split_corpus,
)

from conftest import make_inventory, uniform_random_corpus

NINE_ACTS = """\
INIT
SUGGEST
REJECT
ACCEPT
DELIBERATE @anytime @noise
MOTIVATE
REQUEST_COMMENT
CLARIFY_QUERY @anytime
CLARIFY_ANSWER @anytime
"""

FRAGMENT = """\
== fragment
A\tMOTIVATE
A\tREJECT
A\tINIT
B\tDELIBERATE
B\tREJECT
"""


class TestInventory:
    def test_nine_act_file(self):
        inv = parse_inventory(NINE_ACTS)
        assert len(inv) == 9
        assert inv.names[0] == "INIT"
        assert [a.id for a in inv.acts] == list(range(9))
        anytime = {a.name for a in inv.anytime_acts}
        assert anytime == {"DELIBERATE", "CLARIFY_QUERY", "CLARIFY_ANSWER"}
        assert {a.name for a in inv.social_noise_acts} == {"DELIBERATE"}

    def test_single_act(self):
        inv = parse_inventory("INIT\n")
        assert len(inv) == 1
        assert not inv.anytime_acts

    def test_duplicate_name_reports_line(self):
        with pytest.raises(FormatError, match=r":3.*SUGGEST"):
            parse_inventory("INIT\nSUGGEST\nSUGGEST\n", source="acts.txt")

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_inventory(tmp_path / "nope.txt")

    def test_invalid_name(self):
        with pytest.raises(FormatError, match="invalid act name"):
            parse_inventory("init\n")

    def test_noise_requires_anytime(self):
        with pytest.raises(FormatError, match="@anytime"):
            parse_inventory("INIT\nDELIBERATE @noise\n")

    def test_unknown_tag(self):
        with pytest.raises(FormatError, match="unknown tag"):
            parse_inventory("INIT @sometimes\n")

    def test_comments_and_blanks_skipped(self):
        inv = parse_inventory("# heading\n\nINIT\n\n# tail\nSUGGEST\n")
        assert inv.names == ("INIT", "SUGGEST")

    def test_empty_inventory_rejected(self):
        with pytest.raises(FormatError, match="empty"):
            parse_inventory("# only a comment\n")


class TestCorpusParsing:
    def test_fragment_counts(self):
        inv = parse_inventory(NINE_ACTS)
        corpus = parse_corpus(FRAGMENT, inv)
        assert corpus.n_dialogues == 1
        assert corpus.n_utterances == 5
        assert corpus.n_acts == 5
        acts = [u.acts[0].name for u in corpus.dialogues[0].utterances]
        assert acts == ["MOTIVATE", "REJECT", "INIT", "DELIBERATE", "REJECT"]
        assert [u.speaker for u in corpus.dialogues[0].utterances] == list("AAABB")

    def test_empty_dialogue_rejected(self):
        inv = parse_inventory(NINE_ACTS)
        with pytest.raises(FormatError, match="empty"):
            parse_corpus("== d1\n== d2\nA\tINIT\n", inv)

    def test_unknown_act_names_offender(self):
        inv = parse_inventory(NINE_ACTS)
        with pytest.raises(FormatError, match=r"'d1'.*'FOO'"):
            parse_corpus("== d1\nA\tFOO\n", inv)

    def test_multi_act_reading(self):
        inv = parse_inventory(NINE_ACTS)
        corpus = parse_corpus("== d1\nA\tINIT+SUGGEST\tlet us meet monday\n", inv)
        utt = corpus.dialogues[0].utterances[0]
        assert [a.name for a in utt.acts] == ["INIT", "SUGGEST"]
        assert utt.text == "let us meet monday"
        assert corpus.n_acts == 2

    def test_duplicate_dialogue_id(self):
        inv = parse_inventory(NINE_ACTS)
        with pytest.raises(ValueError, match="duplicate dialogue id"):
            parse_corpus("== d1\nA\tINIT\n== d1\nA\tINIT\n", inv)

    def test_malformed_record(self):
        inv = parse_inventory(NINE_ACTS)
        with pytest.raises(FormatError, match="malformed"):
            parse_corpus("== d1\nA INIT\n", inv)

    def test_unknown_speaker(self):
        inv = parse_inventory(NINE_ACTS)
        with pytest.raises(FormatError, match="speaker"):
            parse_corpus("== d1\nC\tINIT\n", inv)

    def test_utterance_before_header(self):
        inv = parse_inventory(NINE_ACTS)
        with pytest.raises(FormatError, match="before any dialogue header"):
            parse_corpus("A\tINIT\n", inv)

    def test_utterance_count_equals_act_count_single_readings(self):
        inv = make_inventory(5)
        corpus = uniform_random_corpus(inv, 20, (1, 9), seed=3)
        assert corpus.n_utterances == corpus.n_acts


@st.composite
def corpora(draw):
    n_acts = draw(st.integers(2, 6))
    inv = make_inventory(n_acts, anytime=("AA",), noise=("AA",))
    n_dialogues = draw(st.integers(1, 5))
    dialogues = []
    for d in range(n_dialogues):
        n_utts = draw(st.integers(1, 6))
        utts = []
        for _ in range(n_utts):
            speaker = draw(st.sampled_from(["A", "B"]))
            acts = tuple(
                inv.acts[i]
                for i in draw(st.lists(st.integers(0, n_acts - 1), min_size=1, max_size=2))
            )
            text = draw(st.one_of(st.none(), st.from_regex(r"[a-z][a-z ]{0,10}[a-z]", fullmatch=True)))
            utts.append(Utterance(speaker, acts, text))
        dialogues.append(Dialogue(f"d{d}", tuple(utts)))
    return Corpus(inv, tuple(dialogues))


class TestRoundTrip:
    @given(corpora())
    @settings(max_examples=60, deadline=None)
    def test_dump_then_parse_is_identity(self, corpus):
        reloaded = parse_corpus(dump_corpus(corpus), corpus.inventory)
        assert reloaded == corpus

    def test_file_round_trip(self, tmp_path):
        inv = parse_inventory(NINE_ACTS)
        corpus = parse_corpus(FRAGMENT, inv)
        path = tmp_path / "c.corpus"
        path.write_text(dump_corpus(corpus), encoding="utf-8")
        assert load_corpus(path, inv) == corpus


class TestSplit:
    def test_deterministic_80_20(self):
        inv = make_inventory(4)
        corpus = uniform_random_corpus(inv, 10, (2, 5), seed=1)
        train1, held1 = split_corpus(corpus, 0.2, seed=7)
        train2, held2 = split_corpus(corpus, 0.2, seed=7)
        assert (train1, held1) == (train2, held2)
        assert train1.n_dialogues == 8
        assert held1.n_dialogues == 2

    def test_two_dialogue_boundary(self):
        inv = make_inventory(3)
        corpus = uniform_random_corpus(inv, 2, (1, 3), seed=2)
        train, held = split_corpus(corpus, 0.5, seed=0)
        assert train.n_dialogues == 1
        assert held.n_dialogues == 1

    def test_single_dialogue_rejected(self):
        inv = make_inventory(3)
        corpus = uniform_random_corpus(inv, 1, (1, 3), seed=2)
        with pytest.raises(ValueError, match="at least 2"):
            split_corpus(corpus, 0.5, seed=0)

    @pytest.mark.parametrize("fraction", [0.0, 1.0, -0.1, 1.5])
    def test_fraction_range(self, fraction):
        inv = make_inventory(3)
        corpus = uniform_random_corpus(inv, 4, (1, 3), seed=2)
        with pytest.raises(ValueError, match="fraction"):
            split_corpus(corpus, fraction, seed=0)

    @given(
        n=st.integers(2, 30),
        fraction=st.floats(0.01, 0.99),
        seed=st.integers(0, 2**32 - 1),
    )
    @settings(max_examples=80, deadline=None)
    def test_split_is_partition(self, n, fraction, seed):
        inv = make_inventory(3)
        corpus = uniform_random_corpus(inv, n, (1, 3), seed=5)
        train, held = split_corpus(corpus, fraction, seed)
        assert train.n_dialogues >= 1 and held.n_dialogues >= 1
        train_ids = {d.id for d in train.dialogues}
        held_ids = {d.id for d in held.dialogues}
        assert train_ids.isdisjoint(held_ids)
        assert sorted(train_ids | held_ids) == sorted(d.id for d in corpus.dialogues)


class TestDomainTypes:
    def test_act_label_validation(self):
        with pytest.raises(ValueError):
            ActLabel(0, "init")
        with pytest.raises(ValueError):
            ActLabel(-1, "INIT")

    def test_utterance_needs_acts(self):
        with pytest.raises(ValueError):
            Utterance("A", ())

    def test_inventory_membership(self):
        inv = make_inventory(3)
        assert "AA" in inv
        assert inv.acts[1] in inv
        assert "ZZ" not in inv

    def test_corpus_validates_acts(self):
        inv = make_inventory(2)
        other = make_inventory(3)
        dialogue = Dialogue("d", (Utterance("A", (other.acts[2],)),))
        with pytest.raises(ValueError, match="not in the inventory"):
            Corpus(inv, (dialogue,))

"""Tests for hit-rate scoring, per-dialogue breakdowns, and experiments."""

import random

import pytest

from dialact.corpus import Corpus, Dialogue, Utterance, save_corpus
from dialact.evaluator import (
    ExperimentConfig,
    VariantSpec,
    హit_rate := None,
)

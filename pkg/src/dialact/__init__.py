"""dialact: statistical dialogue-act prediction with a repairing plan recognizer."""

from .corpus import (
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
    save_corpus,
    split_corpus,
)
from .ngram import (
    BEGIN,
    END,
    CountTable,
    EstimationError,
    InterpolationWeights,
    NGramModel,
    dialogue_elements,
    dump_model,
    estimate_weights,
    load_model,
    relative_frequency,
    sample_corpus,
    save_model,
    train_counts,
    train_model,
)
from .evaluator import (
    DEFAULT_SEED,
    ExperimentConfig,
    HitRateReport,
    PerDialogueReport,
    VariantSpec,
    hit_rate,
    per_dialogue_hit_rates,
    run_experiment,
)
from .planner import (
    CompatibilityTable,
    DialogueGrammar,
    DialogueTree,
    PlanOperator,
    PlanRecognizer,
    RepairEvent,
    SubgoalItem,
    load_compatibility,
    load_grammar,
    load_lexicon,
    parse_compatibility,
    parse_grammar,
    parse_lexicon,
)
from .resources import bundled_path

__version__ = "0.1.0"

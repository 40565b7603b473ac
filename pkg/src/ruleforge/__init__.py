"""ruleforge: synthesize token-pattern extraction rules from highlighted examples."""

import sys as _sys

# long searches can build deeply right-nested patterns; tree walks need
# stack headroom beyond the conservative default
if _sys.getrecursionlimit() < 30_000:
    _sys.setrecursionlimit(30_000)

from .corpus import (
    AnnotatedSentence,
    CorpusError,
    DependencyPathError,
    Span,
    SpecEntry,
    SpecMode,
    Specification,
    Token,
    linearize_path,
    load_corpus,
    load_specification,
    query_corpus,
    shortest_dep_path,
)
from .errors import RuleforgeError
from .matcher import (
    IncompletePatternError,
    MatchSet,
    check_spec,
    find_matches,
    least_restrictive_completion,
    matches_exact,
    prune_check,
)
from .pattern import (
    Alternation,
    And,
    Concat,
    ConstraintHole,
    ConstraintNode,
    ExpansionError,
    FieldIs,
    Hole,
    Not,
    Or,
    PatternNode,
    PatternSyntaxError,
    Quantified,
    State,
    TokenPattern,
    Wildcard,
    canonicalize,
    expansions,
    leftmost_hole,
    linearize_ast,
    parse_pattern,
    print_pattern,
)
from .scoring import (
    AugmentedStaticScorer,
    ContextualScorer,
    CostTable,
    Scorer,
    ScorerModel,
    StaticScorer,
    TrainConfig,
    TrainingExample,
    augmentation_reward,
    contextual_score,
    featurize,
    score_transition_multi,
    static_cost,
    train_contextual,
)
from .search import ScorerError, SearchConfig, SearchReport, synthesize

__version__ = "0.1.0"

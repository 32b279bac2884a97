"""Finite tree machinery for localization and prediction experiments."""

from .errors import (BudgetExceeded, HypothesisFailed, InvalidInput, NotSkeletal,
                     TreelocError, Undecided, VerificationFailed)
from .trees import (FiniteTree, RestrictedTree, RuleTree, Tree, TreeDomain,
                    build_minimal_accelerating, full_branching_tree, is_k_tree,
                    pullback, skeleton, split_level, subtree_at, validate)
from .extraction import FunctionFamily, check_grouped_hypothesis, extract_2tree, extract_grouped, n_bound
from .prediction import Predictor, find_evader, predictor_to_trees, predicts, tree_to_predictor
from .pruning import (Condition, DecidedName, HashName, avoid_tree, prune_to_cover,
                      slalom_of_decided)

__version__ = "0.1.0"

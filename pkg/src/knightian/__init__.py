"""Single-good auctions with set-valued (Knightian) types: mechanisms,
dominance computations and welfare audits in exact rational arithmetic."""

from .core import (BudgetExceeded, CandidateSet, Context, DomainError, EmptyInterval,
                   HypothesisViolated, KnightianError, Outcome, Rational, delta_interval,
                   format_rational, inaccuracy, max_social_welfare, parse_rational,
                   social_welfare, validate_context)
from .dominance import (DominanceVerdict, FiniteMechanism, MixedStrategy, UDedSet, dnt,
                        expected_utility, intersection_probe, mixed_dominator, tabulate, uded,
                        very_weakly_dominates, weakly_dominates)
from .lp import LPResult, linprog_exact
from .mechanisms import (AllZeroBids, OptimalMechanism, RandomAssignment, SecondPrice, TieRule,
                         ZeroWinProbability, candidate_winner_count, check_d_dm, check_delta_good,
                         check_monotone, d_delta, f_delta, make_mechanism, piecewise_profile,
                         price_opt, random_assignment, second_price)
from .pricing import PriceExpression, UndecidableAtPrecision
from .welfare import (BoundCurves, NotTruthful, RatioReport, bound_curves, crossover_delta,
                      enumerate_contexts, key_range_check, theorem1_audit, theorem1_construction,
                      theorem35_construction, verify_positive_theorem, worst_case_ratio)

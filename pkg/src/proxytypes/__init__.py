"""Heterogeneous proxytype categorization: prototypes, exemplars and theory networks."""

from .coherence import (EVIDENCE, CoherenceProblem, CoherenceSolution, Constraint, Element,
                        ObservationSet, TheoryNetwork, build_problem, coherence_score,
                        solve, solve_exact, solve_greedy)
from .delta import (CategorizationResult, DecisionTrace, Kind, ProxyToken, Stage, Stimulus,
                    categorize_many, delta_categorize, explain, parse_stimuli, parse_trace,
                    proxyfy)
from .errors import (DimensionMismatch, EmptyKnowledgeBase, KBError, KBRangeError,
                     KBReferenceError, ParseError, ProxytypeError, SchemaError, StaleResult,
                     TooLarge, UnknownConcept)
from .kb import (ConceptEntry, EngineParams, ExemplarBody, KnowledgeBase, PrototypeBody,
                 all_exemplars, all_prototypes, all_theories, dumps, load, load_path, loads,
                 theory_of)
from .space import (ConceptualSpace, Dimension, Domain, Point, distance, similarity,
                    validate_point)

__version__ = "0.1.0"

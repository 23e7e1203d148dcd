"""Coherence maximization over signed, weighted theory networks.

A theory is a set of elements joined by positive constraints (the two
elements should be accepted or rejected together) and negative constraints
(exactly one of them should be accepted).  Observations from a stimulus are
attached to a distinguished ``EVIDENCE`` element that is always accepted.
The coherence of a stimulus with a theory is the best achievable fraction
of constraint weight satisfied by a partition into accepted/rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable

import numpy as np

from .errors import TooLarge

__all__ = [
    "EVIDENCE",
    "Element",
    "Constraint",
    "TheoryNetwork",
    "ObservationSet",
    "CoherenceProblem",
    "CoherenceSolution",
    "build_problem",
    "satisfied_weight",
    "solve_exact",
    "solve_greedy",
    "solve",
    "coherence_score",
    "DEFAULT_EXACT_CAP",
]

EVIDENCE = "__EVIDENCE__"
DEFAULT_EXACT_CAP = 20
# flips whose gain is within this band count as zero-gain moves
_GAIN_EPS = 1e-12


@dataclass(frozen=True, order=True)
class Element:
    id: str
    label: str | None = None


@dataclass(frozen=True)
class Constraint:
    a: str
    b: str
    positive: bool
    weight: float

    def __post_init__(self):
        if self.a == self.b:
            raise ValueError(f"constraint endpoints must differ, got {self.a!r} twice")
        if not (self.weight > 0 and math.isfinite(self.weight)):
            raise ValueError(f"constraint ({self.a}, {self.b}) weight must be positive")

    @property
    def sign(self) -> str:
        return "+" if self.positive else "-"

    def satisfied_by(self, accepted_a: bool, accepted_b: bool) -> bool:
        return (accepted_a == accepted_b) == self.positive


@dataclass(frozen=True)
class TheoryNetwork:
    """Elements plus constraints; both stored as tuples in declaration order."""

    elements: tuple[Element, ...]
    constraints: tuple[Constraint, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        ids = [e.id for e in self.elements]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate element ids in theory")
        if EVIDENCE in ids:
            raise ValueError(f"element id {EVIDENCE!r} is reserved")
        known = set(ids)
        pairs = set()
        for c in self.constraints:
            for end in (c.a, c.b):
                if end not in known:
                    raise ValueError(f"constraint endpoint {end!r} is not a declared element")
            pair = frozenset((c.a, c.b))
            if pair in pairs:
                raise ValueError(f"more than one constraint between {c.a!r} and {c.b!r}")
            pairs.add(pair)

    def __hash__(self):
        # theories are hashed on every memoized solve, so the hash is kept
        return self._hash

    @cached_property
    def _hash(self) -> int:
        return hash((self.elements, self.constraints))

    @cached_property
    def element_ids(self) -> frozenset[str]:
        return frozenset(e.id for e in self.elements)


@dataclass(frozen=True)
class ObservationSet:
    observed: frozenset[str] = frozenset()
    contradicted: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "observed", frozenset(self.observed))
        object.__setattr__(self, "contradicted", frozenset(self.contradicted))
        both = self.observed & self.contradicted
        if both:
            raise ValueError(f"ids both observed and contradicted: {sorted(both)}")


@dataclass(frozen=True)
class CoherenceProblem:
    """A theory plus evidence constraints tying observations to ``EVIDENCE``.

    ``constraints`` lists the theory's own constraints first, then evidence
    constraints in sorted element order; every weight sum in this module is
    taken in that order.
    """

    theory: TheoryNetwork
    evidence: tuple[Constraint, ...]
    data_priority: float = 1.0

    @property
    def free_elements(self) -> tuple[str, ...]:
        return tuple(sorted(e.id for e in self.theory.elements))

    @property
    def constraints(self) -> tuple[Constraint, ...]:
        return self.theory.constraints + self.evidence

    @property
    def total_weight(self) -> float:
        total = 0.0
        for c in self.constraints:
            total += c.weight
        return total


@dataclass(frozen=True)
class CoherenceSolution:
    accepted: frozenset[str]
    rejected: frozenset[str]
    satisfied_weight: float
    total_weight: float
    exact: bool

    @property
    def score(self) -> float:
        if self.total_weight <= 0:
            return 0.0
        return self.satisfied_weight / self.total_weight


def build_problem(theory: TheoryNetwork, obs: ObservationSet, w_d: float = 1.0) -> CoherenceProblem:
    """Attach the observations that name theory elements to ``EVIDENCE``.

    Observed ids the theory does not mention are ignored.
    """
    if not (w_d > 0 and math.isfinite(w_d)):
        raise ValueError(f"data priority must be positive, got {w_d}")
    ids = theory.element_ids
    evidence = []
    for eid in sorted((obs.observed | obs.contradicted) & ids):
        evidence.append(Constraint(eid, EVIDENCE, eid in obs.observed, w_d))
    return CoherenceProblem(theory, tuple(evidence), w_d)


def satisfied_weight(problem: CoherenceProblem, accepted: Iterable[str]) -> float:
    """Weight of the constraints a given accepted set satisfies.

    ``EVIDENCE`` is always treated as accepted.
    """
    acc = set(accepted) | {EVIDENCE}
    total = 0.0
    for c in problem.constraints:
        if c.satisfied_by(c.a in acc, c.b in acc):
            total += c.weight
    return total


def _solution(problem, accepted, exact):
    accepted = frozenset(accepted)
    return CoherenceSolution(
        accepted=accepted,
        rejected=frozenset(problem.free_elements) - accepted,
        satisfied_weight=satisfied_weight(problem, accepted),
        total_weight=problem.total_weight,
        exact=exact,
    )


@lru_cache(maxsize=4096)
def _theory_table(theory: TheoryNetwork):
    """Satisfied internal weight of every partition of the theory's elements.

    Bit ``i`` of a mask marks the ``i``-th element in sorted id order as accepted.
    """
    order = sorted(e.id for e in theory.elements)
    index = {eid: i for i, eid in enumerate(order)}
    masks = np.arange(1 << len(order), dtype=np.int64)
    bits = [((masks >> i) & 1).astype(bool) for i in range(len(order))]
    values = np.zeros(len(masks))
    for c in theory.constraints:
        same = bits[index[c.a]] == bits[index[c.b]]
        sat = same if c.positive else ~same
        values = values + np.where(sat, c.weight, 0.0)
    return masks, bits, values, index


def _exact_values(problem: CoherenceProblem):
    """Every mask with its satisfied weight, summed in constraint order."""
    masks, bits, values, index = _theory_table(problem.theory)
    for c in problem.evidence:
        accepted = bits[index[c.a]]
        values = values + np.where(accepted if c.positive else ~accepted, c.weight, 0.0)
    return masks, values


def _smallest_accepted(candidates: np.ndarray) -> int:
    """Among masks, the one whose sorted accepted-id tuple is lexicographically least."""
    prefix = 0
    while True:
        rest = candidates ^ prefix
        if (rest == 0).any():
            return prefix
        low = rest & -rest
        m = int(low.min())
        candidates = candidates[low == m]
        prefix |= m


def solve_exact(problem: CoherenceProblem, cap: int = DEFAULT_EXACT_CAP) -> CoherenceSolution:
    """Globally optimal partition by enumerating all 2^n acceptances.

    Ties go to the partition whose accepted set, as a sorted tuple of ids, is
    lexicographically smallest.
    """
    order = problem.free_elements
    if len(order) > cap:
        raise TooLarge(f"{len(order)} free elements exceeds exact-solver cap {cap}")
    masks, values = _exact_values(problem)
    best = values.max()
    mask = _smallest_accepted(masks[values == best])
    accepted = [eid for i, eid in enumerate(order) if mask >> i & 1]
    return _solution(problem, accepted, exact=True)


def solve_greedy(problem: CoherenceProblem) -> CoherenceSolution:
    """Deterministic single-flip local search from the all-accepted partition.

    Each round flips the element with the largest positive gain (ties to the
    smallest id).  When no flip improves, an accepted element whose flip is
    gain-neutral is rejected instead, smallest id first, which steers plateaus
    toward the same tie-break as :func:`solve_exact`.  Every move either raises
    the satisfied weight or shrinks the accepted set, so the search terminates.
    """
    order = problem.free_elements
    state = {eid: True for eid in order}
    state[EVIDENCE] = True
    incident: dict[str, list[Constraint]] = {eid: [] for eid in order}
    for c in problem.constraints:
        for end in (c.a, c.b):
            if end != EVIDENCE:
                incident[end].append(c)

    def gain(eid):
        g = 0.0
        for c in incident[eid]:
            before = c.satisfied_by(state[c.a], state[c.b])
            state[eid] = not state[eid]
            after = c.satisfied_by(state[c.a], state[c.b])
            state[eid] = not state[eid]
            if after != before:
                g += c.weight if after else -c.weight
        return g

    while True:
        gains = [(gain(eid), eid) for eid in order]
        best_gain, best_id = None, None
        for g, eid in gains:
            if g > _GAIN_EPS and (best_gain is None or g > best_gain):
                best_gain, best_id = g, eid
        if best_id is None:
            for g, eid in gains:
                if state[eid] and abs(g) <= _GAIN_EPS:
                    best_id = eid
                    break
        if best_id is None:
            break
        state[best_id] = not state[best_id]

    return _solution(problem, [eid for eid in order if state[eid]], exact=False)


def solve(problem: CoherenceProblem, cap: int = DEFAULT_EXACT_CAP) -> CoherenceSolution:
    """Exact when the problem fits under ``cap``, greedy otherwise."""
    if len(problem.theory.elements) <= cap:
        return solve_exact(problem, cap)
    return solve_greedy(problem)


def coherence_score(theory: TheoryNetwork, obs: ObservationSet, w_d: float = 1.0,
                    cap: int = DEFAULT_EXACT_CAP) -> float:
    """Fraction of constraint weight satisfied by the best partition found.

    A problem with no constraints at all scores 0.  Equal to
    ``solve(build_problem(...), cap).score`` bit for bit, but memoized and
    without constructing the partition.
    """
    return _score(build_problem(theory, obs, w_d), cap)


@lru_cache(maxsize=1 << 16)
def _score(problem: CoherenceProblem, cap: int) -> float:
    if len(problem.theory.elements) > cap:
        return solve_greedy(problem).score
    total = problem.total_weight
    if total <= 0:
        return 0.0
    # each row of the table is the same ordered sum satisfied_weight() takes
    return float(_exact_values(problem)[1].max()) / total

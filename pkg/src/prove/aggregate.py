"""Verification filtering and majority voting.

A candidate is valid when its stated answer matches what its translated
program actually printed. Valid candidates vote; when none survive, the
vote falls back to every candidate that stated an answer at all.
"""

from dataclasses import dataclass, replace
from typing import Optional

from prove.answers import AnswerValue, equivalent
from prove.errors import EmptyInput
from prove.execution import ExecutionOutcome, ProgramArtifact, STATUS_OK


@dataclass(frozen=True)
class Candidate:
    index: int
    solution_text: str
    extracted: Optional[AnswerValue] = None
    program: Optional[ProgramArtifact] = None
    outcome: Optional[ExecutionOutcome] = None
    valid: bool = False


@dataclass(frozen=True)
class VoteClass:
    representative: AnswerValue
    count: int
    members: tuple  # candidate indices, ascending


@dataclass(frozen=True)
class AggregateDecision:
    final: Optional[AnswerValue]
    tallies: tuple  # VoteClass, largest first
    used_fallback: bool
    valid_count: int


def verify(candidate: Candidate) -> Candidate:
    """Set validity: stated answer must match a successful program's output."""
    ok = (
        candidate.extracted is not None
        and candidate.outcome is not None
        and candidate.outcome.status == STATUS_OK
        and candidate.outcome.parsed is not None
        and equivalent(candidate.extracted, candidate.outcome.parsed)
    )
    return replace(candidate, valid=ok)


def majority_vote(answers) -> tuple:
    """Greedy equivalence-class vote over (index, value) pairs.

    Ties go to the class containing the smallest candidate index; each
    class is represented by its smallest-index member.
    """
    pairs = sorted(answers, key=lambda pair: pair[0])
    if not pairs:
        raise EmptyInput("cannot vote over an empty answer list")
    classes = []  # [representative, count, [indices]]
    for index, value in pairs:
        for entry in classes:
            if equivalent(entry[0], value):
                entry[1] += 1
                entry[2].append(index)
                break
        else:
            classes.append([value, 1, [index]])
    tallies = tuple(
        sorted(
            (VoteClass(rep, count, tuple(members))
             for rep, count, members in classes),
            key=lambda c: (-c.count, c.members[0]),
        )
    )
    return tallies[0].representative, tallies


def prove_decide(candidates) -> AggregateDecision:
    """Vote the valid pool; fall back to all answered candidates when empty."""
    valid_pool = [(c.index, c.extracted) for c in candidates
                  if c.valid and c.extracted is not None]
    answered = [(c.index, c.extracted) for c in candidates
                if c.extracted is not None]
    used_fallback = not valid_pool
    pool = valid_pool or answered
    if not pool:
        return AggregateDecision(final=None, tallies=(),
                                 used_fallback=True, valid_count=0)
    final, tallies = majority_vote(pool)
    return AggregateDecision(
        final=final,
        tallies=tallies,
        used_fallback=used_fallback,
        valid_count=len(valid_pool),
    )

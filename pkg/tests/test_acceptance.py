"""Acceptance gate: one test per shipping criterion, run with -v for the
one-line pass/fail verdict per criterion.

Budgets asserted inside the tests: regression pair < 5 s, benchmark double
run < 30 s, exhaustive voting < 10 s. Everything runs offline from committed
replay fixtures; no test here opens a network connection.
"""

import itertools
import json
import threading
import time
from dataclasses import replace
from fractions import Fraction
from pathlib import Path

import pytest

from prove.aggregate import Candidate, majority_vote, prove_decide, verify
from prove.answers import equivalent, normalize
from prove.execution import (
    ProgramArtifact,
    SandboxLimits,
    STATUS_NONZERO,
    STATUS_OK,
    STATUS_TIMEOUT,
    execute,
)
from prove.pipeline import config_from_file, confusion_matrix, emit_report, run_pipeline

FIXTURES = Path(__file__).parent / "fixtures"
FIG6 = FIXTURES / "fig6"
BENCH = FIXTURES / "bench20"


@pytest.fixture(scope="module")
def bench20_runs(tmp_path_factory):
    """Run the 20-problem benchmark twice; shared by three criteria."""
    config = config_from_file(BENCH / "config.json")
    started = time.monotonic()
    first = run_pipeline(config)
    second = run_pipeline(config)
    elapsed = time.monotonic() - started
    out = tmp_path_factory.mktemp("bench-reports")
    emit_report(first, out / "first.json")
    emit_report(second, out / "second.json")
    return {
        "first": first,
        "second": second,
        "first_bytes": (out / "first.json").read_bytes(),
        "second_bytes": (out / "second.json").read_bytes(),
        "elapsed": elapsed,
    }


def test_criterion_fig6_regression_fixture(tmp_path):
    started = time.monotonic()
    config = config_from_file(FIG6 / "config.json")
    assert config.base_url is None  # replay cache only, no network

    filtered = run_pipeline(config)
    out = tmp_path / "report.json"
    emit_report(filtered, out)
    assert out.read_bytes() == (FIG6 / "golden_report.json").read_bytes()

    by_id = {r.problem_id: r for r in filtered.results}
    left, right = by_id["fig6-left"], by_id["fig6-right"]
    # both flawed candidate pairs (stating 15.10 / 3) are marked invalid
    assert [a.valid for a in left.audit] == [False, False, True]
    assert [a.extracted for a in left.audit] == ["15.1", "15.1", "15"]
    assert [a.valid for a in right.audit] == [False, False, True]
    assert [a.extracted for a in right.audit] == ["3", "3", "4"]

    raw_majority = run_pipeline(replace(config, method="maj"))
    majority_by_id = {r.problem_id: r for r in raw_majority.results}
    for problem_id in ("fig6-left", "fig6-right"):
        final = by_id[problem_id].decision.final
        majority = majority_by_id[problem_id].decision.final
        assert not equivalent(final, majority)
    assert filtered.correct == 2 and raw_majority.correct == 0

    assert time.monotonic() - started < 5.0


def test_criterion_benchmark_accuracy_reproduced_twice(bench20_runs):
    first, second = bench20_runs["first"], bench20_runs["second"]
    assert first.accuracy == Fraction(90, 100)
    assert second.accuracy == Fraction(90, 100)
    maj_16 = {row.n: row for row in first.sweep}[16]
    assert Fraction(maj_16.maj_correct, maj_16.total) == Fraction(55, 100)
    assert bench20_runs["first_bytes"] == bench20_runs["second_bytes"]
    assert bench20_runs["first_bytes"] == (BENCH / "golden_report.json").read_bytes()
    assert bench20_runs["elapsed"] < 30.0


def _vote_oracle_classes(values):
    """Union-find pairwise grouping, independent of the greedy implementation."""
    n = len(values)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if equivalent(values[i], values[j]):
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    classes = {}
    for i in range(n):
        classes.setdefault(find(i), []).append(i)
    return sorted(classes.values(), key=lambda c: (-len(c), c[0]))


def test_criterion_voting_matches_bruteforce_oracle():
    started = time.monotonic()
    alphabets = [
        [normalize(s) for s in ("3", "4", "5")],
        [normalize(s) for s in ("1/3", "0.3333333", "x")],
    ]
    checked = 0
    for alphabet in alphabets:
        for length in range(1, 7):
            for assignment in itertools.product(alphabet, repeat=length):
                values = list(assignment)
                final, tallies = majority_vote(list(enumerate(values)))
                oracle = _vote_oracle_classes(values)
                got = [(t.count, list(t.members)) for t in tallies]
                expected = [(len(c), c) for c in oracle]
                assert got == expected, f"tally mismatch on {values}"
                assert equivalent(final, values[oracle[0][0]])
                checked += 1
    assert checked == 2 * sum(3 ** k for k in range(1, 7))
    assert time.monotonic() - started < 10.0


# Curated equivalence pairs. Verdicts are hand-assigned from the comparison
# rules: exact values compare exactly; any decimal comparison allows
# |a-b| <= max(1e-6, 1e-4 * max(|a|, |b|)); numeric never equals symbolic;
# symbolic compares whitespace-stripped text. Boundary cases sit exactly on
# the tolerance and are expected to pass (<=, not <).
EQUIVALENCE_PAIRS = [
    # integers: formatting that must not matter
    ("15", "15", True),
    ("015", "15", True),
    ("+7", "7", True),
    ("-12", "-12", True),
    ("1,250", "1250", True),
    ("1,000,000", "1000000", True),
    ("42.", "42", True),
    ("$15", "15", True),
    ("$1,000", "1000", True),
    ("50%", "50", True),
    ("36 dollars", "36", True),
    ("75 cents", "75", True),
    ("-0", "0", True),
    ("007", "7", True),
    ("2.000", "2", True),
    ("16.0", "16", True),
    ("$12.00", "12", True),
    ("+0", "-0", True),
    ("99999999999999999999", "99999999999999999999", True),
    ("  8  ", "8", True),
    # integers: different values stay different
    ("15", "16", False),
    ("-5", "5", False),
    ("100", "1000", False),
    ("99999999999999999999", "99999999999999999998", False),
    ("0", "1", False),
    ("12", "21", False),
    ("1,250", "1,260", False),
    ("$19", "$20", False),
    ("7", "-7", False),
    ("300", "3000", False),
    # decimals: identical values in different dress
    ("0.5", "0.50", True),
    (".5", "0.5", True),
    ("+0.25", "0.25", True),
    ("-1.75", "-1.75", True),
    ("3.14", "3.1400", True),
    ("$3.50", "3.5", True),
    ("15.10", "15.1", True),
    ("0.125", ".125", True),
    # decimals: tolerance arithmetic, including exact boundary hits
    ("15.10", "15.00", False),
    ("1/2", "0.5", True),
    ("0", "0.000001", True),
    ("0", "0.0000011", False),
    ("0", "0.0000009", True),
    ("2", "2.0000001", True),
    ("2", "2.0001", True),
    ("2", "2.001", False),
    ("1000000", "1000099.5", True),
    ("1000000", "1000200.5", False),
    ("1/3", "0.3333333", True),
    ("1/3", "0.3333", True),
    ("1/3", "0.333", False),
    ("2/3", "0.6667", True),
    ("2/3", "0.666", False),
    ("0.1", "0.10001", True),
    ("0.1", "0.1002", False),
    ("-0.5", "0.5", False),
    ("-2.5", "-2.5000001", True),
    ("3.14159", "3.1416", True),
    ("3.14159", "3.15", False),
    ("15", "15.000000000000002", True),
    ("0.0000009", "0.0000018", True),
    ("0.0000009", "0.0000021", False),
    ("100.001", "100.002", True),
    ("100.001", "100.2", False),
    ("0.001", "0.002", False),
    ("123456.78", "123456.79", True),
    ("-15.10", "-15.00", False),
    ("-1/3", "-0.3333333", True),
    ("0.5", "0.4999999", True),
    ("0.5", "0.4999", False),
    ("0.5", "0.49995", True),
    ("0.5", "0.49994", False),
    # fractions
    ("1/2", "2/4", True),
    ("1/3", "2/6", True),
    ("-3/4", "-0.75", True),
    ("\\frac{1}{2}", "0.5", True),
    ("\\frac{3}{4}", "3/4", True),
    ("\\dfrac{7}{8}", "0.875", True),
    ("\\tfrac{1}{4}", "0.25", True),
    ("-\\frac{3}{4}", "-0.75", True),
    ("\\frac{-3}{4}", "-3/4", True),
    ("22/7", "3.14", False),
    ("22/7", "3.142857", True),
    ("1/2", "1/3", False),
    ("5/5", "1", True),
    ("10/2", "5", True),
    ("$\\frac{1}{2}$", "1/2", True),
    ("7/3", "2.3333333", True),
    ("7/3", "2.333", False),
    ("-1/2", "1/2", False),
    ("3/4", "0.7", False),
    ("1 / 2", "0.5", True),
    ("100/400", "0.25", True),
    ("2/3", "\\frac{2}{3}", True),
    # currency, percent, units: decoration strips, never rescales
    ("$15.00", "15", True),
    ("$15.00", "$15", True),
    ("$0.50", "1/2", True),
    ("15\\$", "15", True),
    ("50\\%", "50", True),
    ("12%", "12", True),
    ("12%", "0.12", False),
    ("30 dollars", "30", True),
    ("5 cents", "5", True),
    ("1 dollar", "1", True),
    ("1 cent", "1", True),
    ("$1,234.50", "1234.5", True),
    ("$20", "20.00", True),
    ("$5", "6", False),
    ("99 cents", "0.99", False),
    ("$10.50", "10.49", False),
    # symbolic text: canonical up to whitespace and \left \right
    ("x+1", "x + 1", True),
    ("\\left(x+1\\right)", "(x+1)", True),
    ("2x", "2 x", True),
    ("\\pi", "\\pi", True),
    ("x^2+1", "x^2 + 1", True),
    ("a+b", "a+b", True),
    ("  y  ", "y", True),
    ("\\sqrt{2}", "\\sqrt{2}", True),
    ("3x+2", "3x + 2", True),
    ("(x)(y)", "(x) (y)", True),
    ("x", "y", False),
    ("x+1", "x+2", False),
    ("x^2", "x^{2}", False),
    ("\\pi", "pi", False),
    ("\\sqrt{2}", "1.414", False),
    ("2x", "x2", False),
    ("x+y", "y+x", False),
    ("X", "x", False),
    # numeric against symbolic is always a mismatch
    ("5", "x", False),
    ("half", "1/2", False),
    ("0.5", "one half", False),
    ("\\frac{1}{2}", "half", False),
    ("15", "fifteen", False),
    ("4", "four zebras", False),
    # more integer dress
    ("1,000", "1000", True),
    ("-1,250", "-1250", True),
    ("+1,250", "1250", True),
    ("000", "0", True),
    ("-000", "0", True),
    ("10", "010", True),
    ("25.", "25.0", True),
    ("7.", "7", True),
    ("$100", "100.", True),
    ("12 dollars", "$12", True),
    ("120", "12", False),
    ("-3", "3", False),
    ("0", "-1", False),
    ("999", "1000", False),
    ("888", "-888", False),
    ("44", "4", False),
    # more tolerance checks
    ("0.333333333333", "1/3", True),
    ("0.66667", "2/3", True),
    ("0.667", "2/3", False),
    ("1.4142", "1.41421", True),
    ("3.0001", "3", True),
    ("3.001", "3", False),
    ("-0.0000005", "0", True),
    ("-0.0000005", "0.0000005", True),
    ("-0.0000006", "0.0000006", False),
    ("10000.5", "10001.5", True),
    ("10000.5", "10002.5", False),
    ("0.0001", "0.00010001", True),
    ("5.5", "5.55", False),
    ("123.456", "123.456", True),
    ("-123.456", "123.456", False),
    ("2.5", "5/2", True),
    ("-2.5", "-5/2", True),
    ("0.1", "1/10", True),
    ("0.3", "3/10", True),
    ("0.7", "7/10", True),
    # more fractions
    ("4/8", "0.5", True),
    ("-4/8", "-1/2", True),
    ("6/4", "1.5", True),
    ("6/4", "3/2", True),
    ("9/3", "3", True),
    ("\\frac{10}{4}", "2.5", True),
    ("\\frac{1}{8}", "0.125", True),
    ("\\frac{1}{8}", "0.120", False),
    ("1/7", "0.142857", True),
    ("1/7", "0.1429", False),
    ("1/9", "0.1111", True),
    ("1/9", "0.111", False),
    ("1/1", "1", True),
    ("0/5", "0", True),
    ("2/5", "0.4", True),
    ("-7/2", "-3.5", True),
    ("14/4", "3.5", True),
    ("100/3", "33.3333", True),
    ("100/3", "33.3", False),
    ("5/0", "x", False),
    ("5/0", "5/0", True),
    # more decoration
    ("$2.50", "$2.50", True),
    ("$2.50", "250", False),
    ("75%", "3/4", False),
    ("$0.99", "0.99", True),
    ("1,234", "1234.0", True),
    ("  $5.25 ", "5.25", True),
    ("20 cents", "$20", True),
    ("fifteen dollars", "15", False),
    ("zero", "0", False),
]


def test_criterion_answer_equivalence_200_curated_pairs():
    assert len(EQUIVALENCE_PAIRS) == 200
    failures = []
    for left, right, expected in EQUIVALENCE_PAIRS:
        a, b = normalize(left), normalize(right)
        got = equivalent(a, b)
        if got != expected or equivalent(b, a) != expected:
            failures.append((left, right, expected, got))
    assert not failures, f"{len(failures)} disagreements: {failures[:10]}"


def test_criterion_sandbox_limits_enforced():
    limits = SandboxLimits(wall_ms=600, mem_mb=128)

    # busy loop: killed as a timeout within the grace window, 10/10
    busy = ProgramArtifact(source="while True:\n    pass\n",
                           origin_candidate=0, fence_found=True)
    for trial in range(10):
        outcome = execute(busy, limits)
        assert outcome.status == STATUS_TIMEOUT, f"trial {trial}: {outcome}"
        assert outcome.duration_ms <= 600 + 500

    # allocation bomb: contained kill, harness keeps going
    bomb = ProgramArtifact(
        source=("blocks = []\nwhile True:\n"
                "    blocks.append(bytearray(1 << 20))\n"),
        origin_candidate=0, fence_found=True)
    outcome = execute(bomb, SandboxLimits(wall_ms=5000, mem_mb=128))
    assert outcome.status in (STATUS_NONZERO, STATUS_TIMEOUT)
    follow_up = execute(ProgramArtifact(source="print(41 + 1)\n",
                                        origin_candidate=0,
                                        fence_found=True), limits)
    assert follow_up.status == STATUS_OK
    assert follow_up.parsed.render() == "42"

    # isolation: eight concurrent programs share a file NAME, never a file
    iso = ProgramArtifact(
        source=("import os, time\n"
                "with open('scratch.txt', 'w') as fh:\n"
                "    fh.write(str(os.getpid()))\n"
                "time.sleep(0.05)\n"
                "with open('scratch.txt') as fh:\n"
                "    print(fh.read())\n"),
        origin_candidate=0, fence_found=True)
    slots = threading.Semaphore(8)
    results = [None] * 8
    threads = [
        threading.Thread(
            target=lambda k: results.__setitem__(
                k, execute(iso, SandboxLimits(wall_ms=5000, mem_mb=128),
                           slots=slots)),
            args=(k,))
        for k in range(8)
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert all(r.status == STATUS_OK for r in results)
    pids = {r.parsed.render() for r in results}
    assert len(pids) == 8  # same-named files never collided


def test_criterion_confusion_matrix_exact_rational():
    # Live-mode target from the measured run this models: match rate 97.3 on
    # correct solutions (mismatch 2.7) and 33.9 on wrong ones (66.1 rejected).
    # Those live numbers need live generations, so they are documented here
    # rather than CI-gated; the arithmetic itself is pinned exactly.
    pairs = ([(True, True)] * 6 + [(True, False)]
             + [(False, True)] + [(False, False)] * 2)
    matrix = confusion_matrix(pairs)
    assert matrix.tpr == Fraction(6, 7)
    assert matrix.fpr == Fraction(1, 3)
    assert matrix.fnr == Fraction(1, 7)
    assert matrix.tnr == Fraction(2, 3)
    assert (matrix.tp, matrix.fn, matrix.fp, matrix.tn) == (6, 1, 1, 2)


def test_criterion_ablation_sweep_pinned(bench20_runs):
    rows = bench20_runs["first"].sweep
    assert [(r.n, r.prove_correct, r.maj_correct, r.total) for r in rows] == [
        (4, 18, 9, 20),
        (8, 18, 11, 20),
        (16, 18, 11, 20),
    ]
    for row in rows:
        assert row.prove_correct >= row.maj_correct
    for earlier, later in zip(rows, rows[1:]):
        assert later.prove_correct >= earlier.prove_correct
        assert later.maj_correct >= earlier.maj_correct


def test_criterion_fallback_vote_over_invalid_pool(bench20_runs):
    result = {r.problem_id: r for r in bench20_runs["first"].results}["c1"]
    assert result.decision.used_fallback is True
    assert result.decision.valid_count == 0
    # the fallback final must equal the plain majority over the invalid pool
    answers = [normalize(a.extracted) for a in result.audit if a.extracted]
    majority_final, _ = majority_vote(list(enumerate(answers)))
    assert equivalent(result.decision.final, majority_final)
    assert result.decision.final.render() == "9"
    assert result.correct is False

    # unit-level restatement: zero valid candidates flips the fallback flag
    candidates = [
        verify(Candidate(index=i, solution_text="t", extracted=normalize("9"),
                         program=None, outcome=None))
        for i in range(3)
    ]
    decision = prove_decide(candidates)
    assert decision.used_fallback and decision.valid_count == 0
    assert decision.final.render() == "9"

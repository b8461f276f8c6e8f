"""End-to-end orchestration: sample, extract, translate, execute, vote, report."""

import hashlib
import json
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Optional

from prove.aggregate import AggregateDecision, Candidate, prove_decide, verify
from prove.answers import AnswerValue, equivalent, extract_answer_rule_based
from prove.datasets import DatasetSpec, load_dataset, spec_for
from prove.errors import EmptyInput, InsufficientPool
from prove.execution import (
    SandboxLimits,
    execute,
    extract_code_block,
    runner_cmd_from_config,
)
from prove.gateway import CacheStore, Gateway, GenerationRequest, HttpBackend
from prove.prompts import PS, STYLES, PromptKit, effective_style

METHOD_GREEDY = "greedy"
METHOD_MAJ = "maj"
METHOD_PROVE = "prove"
METHODS = (METHOD_GREEDY, METHOD_MAJ, METHOD_PROVE)


@dataclass(frozen=True)
class RunConfig:
    dataset: DatasetSpec
    solver_model: str
    translation_model: str
    extraction_model: str
    n_samples: int = 16
    temperature: float = 0.7
    style: str = PS
    method: str = METHOD_PROVE
    sample_sweep: Optional[tuple] = None
    limits: SandboxLimits = field(default_factory=SandboxLimits)
    parallelism: int = 4
    cache_path: Optional[Path] = None
    report_path: Optional[Path] = None
    seed: int = 0
    base_url: Optional[str] = None
    runner_cmd: Optional[tuple] = None
    prompts_path: Optional[Path] = None
    max_tokens: int = 1024

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.style not in STYLES:
            raise ValueError(f"unknown style {self.style!r}")
        if self.method == METHOD_GREEDY:
            # Greedy is a single deterministic sample by definition.
            object.__setattr__(self, "n_samples", 1)
            object.__setattr__(self, "temperature", 0.0)
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")
        if self.sample_sweep is not None:
            sweep = tuple(self.sample_sweep)
            if any(n < 1 for n in sweep):
                raise ValueError("sweep sizes must be >= 1")
            if any(n > self.n_samples for n in sweep):
                raise ValueError("sweep sizes cannot exceed n_samples")
            object.__setattr__(self, "sample_sweep", sweep)

    @property
    def boxed(self) -> bool:
        return self.dataset.gold_rule == "boxed"

    @property
    def answer_mode(self) -> str:
        return "boxed" if self.boxed else "numeric"

    def fingerprint(self, prompt_version: int) -> str:
        # Only experiment identity goes in: execution details like
        # parallelism and file locations must not change the bytes.
        identity = {
            "dataset": self.dataset.name,
            "subset_ids": sorted(self.dataset.subset_ids or ()),
            "solver_model": self.solver_model,
            "translation_model": self.translation_model,
            "extraction_model": self.extraction_model,
            "n_samples": self.n_samples,
            "temperature": self.temperature,
            "style": self.style,
            "method": self.method,
            "sample_sweep": list(self.sample_sweep or ()),
            "wall_ms": self.limits.wall_ms,
            "mem_mb": self.limits.mem_mb,
            "seed": self.seed,
            "max_tokens": self.max_tokens,
            "prompt_version": prompt_version,
        }
        canon = json.dumps(identity, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def config_from_dict(raw: dict, base_dir: Path = Path(".")) -> RunConfig:
    data = dict(raw)
    ds = data.pop("dataset")
    if "path" in ds:
        dataset = DatasetSpec(
            name=ds["name"],
            path=Path(base_dir) / ds["path"],
            format=ds["format"],
            gold_rule=ds["gold_rule"],
            subset_ids=tuple(ds["subset_ids"]) if ds.get("subset_ids") else None,
        )
    else:
        dataset = spec_for(
            ds["name"],
            Path(base_dir) / ds.get("data_root", "."),
            subset_ids=ds.get("subset_ids"),
        )
    limits = data.pop("limits", None)
    kwargs = {
        "dataset": dataset,
        "limits": SandboxLimits(**limits) if limits else SandboxLimits(),
    }
    for key in ("solver_model", "translation_model", "extraction_model",
                "n_samples", "temperature", "style", "method", "seed",
                "parallelism", "base_url", "max_tokens"):
        if key in data:
            kwargs[key] = data[key]
    if data.get("sample_sweep"):
        kwargs["sample_sweep"] = tuple(data["sample_sweep"])
    for key in ("cache_path", "report_path", "prompts_path"):
        if data.get(key):
            kwargs[key] = Path(base_dir) / data[key]
    if data.get("runner_cmd"):
        kwargs["runner_cmd"] = tuple(runner_cmd_from_config(data["runner_cmd"]))
    return RunConfig(**kwargs)


def config_from_file(path: Path) -> RunConfig:
    path = Path(path)
    raw = json.loads(path.read_text(encoding="utf-8"))
    return config_from_dict(raw, base_dir=path.parent)


@dataclass(frozen=True)
class CandidateAudit:
    index: int
    extracted: Optional[str]
    status: Optional[str]
    valid: bool
    duration_ms: Optional[int]


@dataclass(frozen=True)
class ProblemResult:
    problem_id: str
    gold: str
    decision: AggregateDecision
    correct: bool
    audit: tuple


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fn: int
    fp: int
    tn: int

    @property
    def tpr(self) -> Optional[Fraction]:
        return Fraction(self.tp, self.tp + self.fn) if self.tp + self.fn else None

    @property
    def fnr(self) -> Optional[Fraction]:
        return Fraction(self.fn, self.tp + self.fn) if self.tp + self.fn else None

    @property
    def fpr(self) -> Optional[Fraction]:
        return Fraction(self.fp, self.fp + self.tn) if self.fp + self.tn else None

    @property
    def tnr(self) -> Optional[Fraction]:
        return Fraction(self.tn, self.fp + self.tn) if self.fp + self.tn else None


@dataclass(frozen=True)
class SweepRow:
    n: int
    prove_correct: int
    maj_correct: int
    total: int


@dataclass(frozen=True)
class RunReport:
    config_fingerprint: str
    method: str
    dataset_name: str
    n_samples: int
    correct: int
    total: int
    results: tuple
    sweep: Optional[tuple]
    confusion: Optional[ConfusionMatrix]

    @property
    def accuracy(self) -> Fraction:
        return Fraction(self.correct, self.total) if self.total else Fraction(0)


def score(results) -> Fraction:
    """Exact accuracy over problem results."""
    results = list(results)
    if not results:
        raise EmptyInput("cannot score an empty result list")
    return Fraction(sum(1 for r in results if r.correct), len(results))


def confusion_matrix(pairs) -> ConfusionMatrix:
    """Cross-tabulate (solution_correct, program_match) pairs."""
    pairs = list(pairs)
    if not pairs:
        raise EmptyInput("cannot tabulate an empty pair list")
    tp = sum(1 for correct, match in pairs if correct and match)
    fn = sum(1 for correct, match in pairs if correct and not match)
    fp = sum(1 for correct, match in pairs if not correct and match)
    tn = sum(1 for correct, match in pairs if not correct and not match)
    return ConfusionMatrix(tp=tp, fn=fn, fp=fp, tn=tn)


def _is_correct(final: Optional[AnswerValue], gold: AnswerValue) -> bool:
    return final is not None and equivalent(final, gold)


def ablation_sweep(pools, ns, seed: int = 0) -> tuple:
    """Score prove and maj on the first-n prefix of every candidate pool.

    pools: list of (gold AnswerValue, verified candidate list). The seed is
    reserved for a shuffled subsampling mode; prefix subsampling ignores it.
    """
    ns = list(ns)
    if not ns:
        return ()
    need = max(ns)
    for gold, candidates in pools:
        if len(candidates) < need:
            raise InsufficientPool(
                f"pool of {len(candidates)} candidates cannot serve n={need}")
    rows = []
    for n in sorted(ns):
        prove_correct = 0
        maj_correct = 0
        for gold, candidates in pools:
            subset = sorted(candidates, key=lambda c: c.index)[:n]
            prove_final = prove_decide(subset).final
            maj_final = prove_decide(
                [replace(c, valid=False) for c in subset]).final
            prove_correct += _is_correct(prove_final, gold)
            maj_correct += _is_correct(maj_final, gold)
        rows.append(SweepRow(n=n, prove_correct=prove_correct,
                             maj_correct=maj_correct, total=len(pools)))
    return tuple(rows)


class _Stages:
    """Per-run bundle of gateway, prompts, and sandbox configuration."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.kit = PromptKit.load(config.prompts_path)
        backend = HttpBackend(config.base_url) if config.base_url else None
        self.gateway = Gateway(CacheStore(config.cache_path), backend,
                               parallelism=config.parallelism)
        self.exec_slots = threading.Semaphore(config.parallelism)
        self.runner_cmd = (list(config.runner_cmd)
                           if config.runner_cmd is not None else None)

    def solutions(self, question: str) -> list:
        style = effective_style(self.config.style, self.config.dataset.gold_rule)
        request = GenerationRequest(
            model=self.config.solver_model,
            messages=tuple((m["role"], m["content"])
                           for m in self.kit.solution_prompt(question, style)),
            temperature=self.config.temperature,
            max_tokens=self.config.max_tokens,
        )
        return self.gateway.sample_n(request, self.config.n_samples)

    def _single(self, model: str, messages: list) -> str:
        request = GenerationRequest(
            model=model,
            messages=tuple((m["role"], m["content"]) for m in messages),
            temperature=0.0,
            max_tokens=self.config.max_tokens,
        )
        return self.gateway.generate(request)

    def extract(self, question: str, solution: str) -> Optional[AnswerValue]:
        mode = self.config.answer_mode
        if not solution.strip():
            return None
        reply = self._single(
            self.config.extraction_model,
            self.kit.extraction_prompt(question, solution, mode))
        value = extract_answer_rule_based(reply, mode)
        if value is None:
            value = extract_answer_rule_based(solution, mode)
        return value

    def translate_and_run(self, question: str, solution: str, index: int):
        translation = self._single(
            self.config.translation_model,
            self.kit.translation_prompt(question, solution, self.config.boxed))
        artifact = extract_code_block(translation, origin_candidate=index)
        outcome = execute(artifact, self.config.limits,
                          runner_cmd=self.runner_cmd,
                          mode=self.config.answer_mode,
                          slots=self.exec_slots)
        return artifact, outcome


def _solve_problem(stages: _Stages, record):
    config = stages.config
    candidates = []
    for index, solution in enumerate(stages.solutions(record.question)):
        extracted = stages.extract(record.question, solution)
        program = None
        outcome = None
        if config.method == METHOD_PROVE and solution.strip():
            program, outcome = stages.translate_and_run(
                record.question, solution, index)
        candidates.append(verify(Candidate(
            index=index, solution_text=solution, extracted=extracted,
            program=program, outcome=outcome)))
    decision = prove_decide(candidates)
    correct = _is_correct(decision.final, record.gold)
    audit = tuple(
        CandidateAudit(
            index=c.index,
            extracted=c.extracted.render() if c.extracted else None,
            status=c.outcome.status if c.outcome else None,
            valid=c.valid,
            duration_ms=c.outcome.duration_ms if c.outcome else None,
        )
        for c in candidates
    )
    result = ProblemResult(problem_id=record.id, gold=record.gold.render(),
                           decision=decision, correct=correct, audit=audit)
    return result, (record.gold, candidates)


def run_pipeline(config: RunConfig) -> RunReport:
    records = load_dataset(config.dataset)
    stages = _Stages(config)
    if config.parallelism > 1 and len(records) > 1:
        with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
            solved = list(pool.map(lambda r: _solve_problem(stages, r), records))
    else:
        solved = [_solve_problem(stages, r) for r in records]
    solved.sort(key=lambda pair: pair[0].problem_id)
    results = tuple(result for result, _ in solved)
    pools = [pool for _, pool in solved]

    sweep = None
    if config.sample_sweep:
        sweep = ablation_sweep(pools, config.sample_sweep, config.seed)

    confusion = None
    if config.method == METHOD_PROVE:
        pairs = [
            (equivalent(c.extracted, gold), c.valid)
            for gold, candidates in pools
            for c in candidates
            if c.extracted is not None
        ]
        if pairs:
            confusion = confusion_matrix(pairs)

    return RunReport(
        config_fingerprint=config.fingerprint(stages.kit.version),
        method=config.method,
        dataset_name=config.dataset.name,
        n_samples=config.n_samples,
        correct=sum(1 for r in results if r.correct),
        total=len(results),
        results=results,
        sweep=sweep,
        confusion=confusion,
    )


# ---------------------------------------------------------------------------
# report serialization


def _accuracy_doc(correct: int, total: int) -> dict:
    value = correct / total if total else 0.0
    return {
        "correct": correct,
        "total": total,
        "value": round(value, 4),
        "percent": f"{100 * value:.2f}",
    }


def _rate_doc(rate: Optional[Fraction]) -> Optional[dict]:
    if rate is None:
        return None
    return {
        "exact": f"{rate.numerator}/{rate.denominator}",
        "percent": f"{float(rate) * 100:.2f}",
    }


def report_document(report: RunReport) -> dict:
    results_doc = []
    for r in report.results:
        results_doc.append({
            "id": r.problem_id,
            "gold": r.gold,
            "final": r.decision.final.render() if r.decision.final else None,
            "correct": r.correct,
            "used_fallback": r.decision.used_fallback,
            "valid_count": r.decision.valid_count,
            "tallies": [
                {"answer": t.representative.render(), "count": t.count,
                 "members": list(t.members)}
                for t in r.decision.tallies
            ],
            "candidates": [
                {"index": a.index, "extracted": a.extracted,
                 "status": a.status, "valid": a.valid}
                for a in r.audit
            ],
        })
    sweep_doc = None
    if report.sweep is not None:
        sweep_doc = [
            {"n": row.n,
             "prove": _accuracy_doc(row.prove_correct, row.total),
             "maj": _accuracy_doc(row.maj_correct, row.total)}
            for row in report.sweep
        ]
    confusion_doc = None
    if report.confusion is not None:
        m = report.confusion
        confusion_doc = {
            "tp": m.tp, "fn": m.fn, "fp": m.fp, "tn": m.tn,
            "tpr": _rate_doc(m.tpr), "fnr": _rate_doc(m.fnr),
            "fpr": _rate_doc(m.fpr), "tnr": _rate_doc(m.tnr),
        }
    return {
        "config_fingerprint": report.config_fingerprint,
        "method": report.method,
        "dataset": report.dataset_name,
        "n_samples": report.n_samples,
        "accuracy": _accuracy_doc(report.correct, report.total),
        "results": results_doc,
        "sweep": sweep_doc,
        "confusion": confusion_doc,
    }


def render_summary(report: RunReport) -> str:
    lines = [
        f"dataset {report.dataset_name}  method {report.method}  "
        f"n {report.n_samples}",
        f"accuracy {report.correct}/{report.total} "
        f"({100 * (report.correct / report.total) if report.total else 0.0:.2f}%)",
    ]
    if report.sweep:
        lines.append("")
        lines.append(f"{'n':>4}  {'prove':>8}  {'maj':>8}")
        for row in report.sweep:
            prove_pct = 100 * row.prove_correct / row.total
            maj_pct = 100 * row.maj_correct / row.total
            lines.append(f"{row.n:>4}  {prove_pct:>7.2f}%  {maj_pct:>7.2f}%")
    if report.confusion:
        m = report.confusion

        def pct(rate):
            return f"{float(rate) * 100:.1f}%" if rate is not None else "n/a"

        lines.append("")
        lines.append(
            f"verification tpr {pct(m.tpr)} fnr {pct(m.fnr)} "
            f"fpr {pct(m.fpr)} tnr {pct(m.tnr)} "
            f"(tp {m.tp} fn {m.fn} fp {m.fp} tn {m.tn})")
    return "\n".join(lines) + "\n"


def emit_report(report: RunReport, path) -> str:
    """Write the canonical JSON report; returns the human-readable summary."""
    doc = report_document(report)
    text = json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return render_summary(report)

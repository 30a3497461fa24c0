"""Evaluation metrics: ROUGE-L, BLEU-4, relatedness/plan/call accuracies.

All metrics live in [0, 1], score 1.0 on identical inputs, and are
permutation-invariant over sample order. Call comparison canonicalizes
datetimes to ISO minutes and treats list-valued args as order-insensitive.
"""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass
from statistics import mean, pstdev
from typing import Callable, Optional, Sequence

from .types import Plan, ToolCall

_TOKEN_RE = re.compile(r"[\w']+|[^\w\s]")


def tokenize(text: str) -> list[str]:
    """Whitespace+punctuation tokenizer shared by the text metrics."""
    return _TOKEN_RE.findall(text.lower())


def _lcs_len(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[-1]))
        prev = cur
    return prev[-1]


def rouge_l(reference: str, hypothesis: str) -> float:
    """LCS-based F1 over tokens."""
    ref, hyp = tokenize(reference), tokenize(hypothesis)
    if not ref:
        warnings.warn("rouge_l: empty reference scores 0", stacklevel=2)
        return 0.0
    if not hyp:
        return 0.0
    lcs = _lcs_len(ref, hyp)
    if lcs == 0:
        return 0.0
    precision = lcs / len(hyp)
    recall = lcs / len(ref)
    return 2 * precision * recall / (precision + recall)


def _ngrams(tokens: Sequence[str], n: int) -> dict[tuple, int]:
    counts: dict[tuple, int] = {}
    for i in range(len(tokens) - n + 1):
        gram = tuple(tokens[i : i + n])
        counts[gram] = counts.get(gram, 0) + 1
    return counts


def bleu(reference: str, hypothesis: str, max_n: int = 4) -> float:
    """BLEU with add-one smoothing on each n-gram precision and the standard
    brevity penalty; orders with no candidate n-grams are skipped."""
    ref, hyp = tokenize(reference), tokenize(hypothesis)
    if not ref:
        warnings.warn("bleu: empty reference scores 0", stacklevel=2)
        return 0.0
    if not hyp:
        return 0.0
    log_sum = 0.0
    orders = 0
    for n in range(1, max_n + 1):
        hyp_ngrams = _ngrams(hyp, n)
        total = sum(hyp_ngrams.values())
        if total == 0:
            continue
        ref_ngrams = _ngrams(ref, n)
        clipped = sum(min(c, ref_ngrams.get(g, 0)) for g, c in hyp_ngrams.items())
        log_sum += math.log((clipped + 1) / (total + 1))
        orders += 1
    if orders == 0:
        return 0.0
    geo = math.exp(log_sum / orders)
    bp = 1.0 if len(hyp) >= len(ref) else math.exp(1 - len(ref) / len(hyp))
    return bp * geo


def relate_acc(pred: Sequence[bool], gold: Sequence[bool]) -> float:
    if len(pred) != len(gold):
        raise ValueError(f"length mismatch: {len(pred)} vs {len(gold)}")
    if not gold:
        return 1.0
    return sum(p == g for p, g in zip(pred, gold)) / len(gold)


def _plan_len(plan: Optional[Plan]) -> int:
    return len(plan.sub_tasks) if plan is not None else 0


def _plan_apis(plan: Optional[Plan]) -> list[str]:
    return [st.api_name for st in plan.sub_tasks] if plan is not None else []


def sub_tasks_num_acc(
    pred_plans: Sequence[Optional[Plan]], gold_plans: Sequence[Optional[Plan]]
) -> float:
    """Fraction of aligned plans with equal sub-task counts."""
    if len(pred_plans) != len(gold_plans):
        raise ValueError("plan lists must align")
    if not gold_plans:
        return 1.0
    equal = sum(_plan_len(p) == _plan_len(g) for p, g in zip(pred_plans, gold_plans))
    return equal / len(gold_plans)


def api_acc(
    pred_plans: Sequence[Optional[Plan]], gold_plans: Sequence[Optional[Plan]]
) -> float:
    """Micro-average over aligned sub-tasks of API equality; unaligned
    positions count as wrong."""
    if len(pred_plans) != len(gold_plans):
        raise ValueError("plan lists must align")
    hits = 0
    total = 0
    for pred, gold in zip(pred_plans, gold_plans):
        p_apis, g_apis = _plan_apis(pred), _plan_apis(gold)
        total += max(len(p_apis), len(g_apis))
        hits += sum(p == g for p, g in zip(p_apis, g_apis))
    return hits / total if total else 1.0


_ISO_DT_RE = re.compile(r"^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}(:\d{2})?$")


def canonical_value(value):
    """Normalize arg values for strict comparison: ISO datetimes to minute
    precision, lists order-insensitive."""
    if isinstance(value, str) and _ISO_DT_RE.match(value):
        return value[:16]
    if isinstance(value, list):
        return tuple(sorted(canonical_value(v) for v in value))
    return value


def canonical_args(args: dict) -> dict:
    return {k: canonical_value(v) for k, v in args.items()}


def calls_match(pred: ToolCall, gold: ToolCall) -> bool:
    return pred.api_name == gold.api_name and canonical_args(pred.args) == canonical_args(
        gold.args
    )


def strict_accuracy(
    pred_calls: Sequence[Sequence[ToolCall]], gold_calls: Sequence[Sequence[ToolCall]]
) -> float:
    """A sample is correct only when its whole call list matches: same APIs
    and the full canonicalized argument mapping, position by position."""
    if len(pred_calls) != len(gold_calls):
        raise ValueError("call lists must align")
    if not gold_calls:
        return 1.0
    correct = 0
    for preds, golds in zip(pred_calls, gold_calls):
        if len(preds) == len(golds) and all(
            calls_match(p, g) for p, g in zip(preds, golds)
        ):
            correct += 1
    return correct / len(gold_calls)


def call_api_accuracy(
    pred_calls: Sequence[Sequence[ToolCall]], gold_calls: Sequence[Sequence[ToolCall]]
) -> float:
    """API-only accuracy over aligned calls (the lenient side of strictness
    dominance: strict_accuracy can never exceed it)."""
    if len(pred_calls) != len(gold_calls):
        raise ValueError("call lists must align")
    hits = 0
    total = 0
    for preds, golds in zip(pred_calls, gold_calls):
        total += max(len(preds), len(golds))
        hits += sum(p.api_name == g.api_name for p, g in zip(preds, golds))
    return hits / total if total else 1.0


@dataclass(frozen=True)
class JudgeScore:
    mean: float
    spread: float
    runs: tuple[float, ...]

    def __str__(self) -> str:
        return f"{self.mean:.2f}±{self.spread:.2f}"


def exact_judge(gold: str, hypothesis: str) -> float:
    """Reference judge: whitespace-normalized exact match."""
    norm = lambda s: " ".join(s.split())
    return 1.0 if norm(gold) == norm(hypothesis) else 0.0


def judge_consistency(
    gold_texts: Sequence[str],
    hyp_texts: Sequence[str],
    judge: Callable[[str, str], float] = exact_judge,
    repetitions: int = 3,
) -> JudgeScore:
    """Semantic-consistency score repeated ``repetitions`` times, reported as
    mean ± spread (population stddev)."""
    if len(gold_texts) != len(hyp_texts):
        raise ValueError("judge inputs must align")
    runs = []
    for _ in range(repetitions):
        if not gold_texts:
            runs.append(1.0)
            continue
        runs.append(mean(judge(g, h) for g, h in zip(gold_texts, hyp_texts)))
    return JudgeScore(mean=mean(runs), spread=pstdev(runs), runs=tuple(runs))

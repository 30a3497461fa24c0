"""Acceptance gate: every release criterion at its stated tolerance.

Each test prints one CRITERION PASS line on success so a plain pytest -s run
doubles as the acceptance checklist. Tolerances are pinned here, not
calibrated elsewhere.
"""

import json
import time

import pytest

from officeagents import annotation, datagen, replay, retrieval, scenarios, transitions
from officeagents.catalog import catalog
from officeagents.orchestrator import Orchestrator
from officeagents.retrieval import RecallPair, build_index, eval_recall
from officeagents.sim import OfficeSimulator

# Printed combination counts for the 16 transition rows, in ledger order.
EXPECTED_COMBINATIONS = [
    6141, 93, 3937, 31, 127, 217, 7, 889, 7, 3, 127, 1, 3, 7, 381, 7,
]

# Per-tool parameter counts in catalog order.
EXPECTED_PARAM_COUNTS = [11, 5, 2, 5, 7, 3, 1, 5, 2, 5, 7, 3, 2, 1, 1, 2, 2, 3, 1, 13, 1]


def _report(name: str):
    print(f"CRITERION PASS: {name}")


def test_transition_arithmetic_exact():
    start = time.perf_counter()
    rules = transitions.ledger()
    got = [transitions.combinations(r.m, r.n) for r in rules]
    assert got == EXPECTED_COMBINATIONS  # zero tolerance
    assert [r.combinations for r in rules] == EXPECTED_COMBINATIONS
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    _report(f"transition arithmetic exact on all 16 rows ({elapsed * 1000:.0f} ms)")


def test_catalog_integrity_exact():
    counts = [len(spec.params) for spec in catalog().values()]
    assert len(counts) == 21
    assert counts == EXPECTED_PARAM_COUNTS  # zero tolerance
    _report("catalog integrity: 21 tools with pinned parameter counts")


def test_enumeration_property_full():
    start = time.perf_counter()
    for rule in transitions.ledger():
        assert rule.combinations <= 10**4  # all rows qualify for full enumeration
        seen = set()
        for pair in transitions.enumerate_combinations(rule):
            seen.add(pair)
        assert len(seen) == rule.combinations, rule
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0
    _report(
        f"enumeration yields exactly the predicted distinct pairs for all rules "
        f"incl. the 6141-row rule ({elapsed:.1f} s)"
    )


def test_closed_loop_pipeline():
    start = time.perf_counter()
    clean = datagen.run_flow("mixed", 500, seed=1, noise=0.0)
    clean_scores = replay.replay_samples(clean).scores()
    assert clean_scores["relate_acc"] == 1.0
    assert clean_scores["sub_tasks_num_acc"] == 1.0
    assert clean_scores["api_acc"] == 1.0
    assert clean_scores["strict_accuracy"] == 1.0

    noisy = datagen.run_flow("mixed", 500, seed=1, noise=0.3)
    noisy_scores = replay.replay_samples(noisy).scores()
    for key in ("relate_acc", "sub_tasks_num_acc", "api_acc", "strict_accuracy"):
        assert noisy_scores[key] < 1.0, key

    again = datagen.run_flow("mixed", 500, seed=1, noise=0.3)
    assert [s.to_dict() for s in again] == [s.to_dict() for s in noisy]

    elapsed = time.perf_counter() - start
    assert elapsed < 60.0
    _report(
        "closed loop: 500 samples at p=0 score 1.0 on all four metrics; "
        f"p=0.3 strictly below 1.0 and deterministic ({elapsed:.1f} s)"
    )


def test_metric_oracles():
    # brute-force oracle agreement is asserted pairwise in test_metrics at
    # 1e-9; here the acceptance re-runs the same frozen fixture end to end
    from tests.test_metrics import PAIRS, bleu_oracle, rouge_oracle
    from officeagents.metrics import bleu, rouge_l

    for ref, hyp in PAIRS:
        assert abs(rouge_l(ref, hyp) - rouge_oracle(ref, hyp)) < 1e-9
        assert abs(bleu(ref, hyp) - bleu_oracle(ref, hyp)) < 1e-9

    for noise in (0.0, 0.3):
        samples = datagen.run_flow("mixed", 300, seed=1, noise=noise)
        scores = replay.replay_samples(samples).scores()
        assert scores["strict_accuracy"] <= scores["call_api_acc"] + 1e-12
    _report(
        "rouge/bleu match brute-force oracles on the frozen 10-pair fixture to 1e-9; "
        "strict accuracy never exceeds api accuracy on generated sets"
    )


def test_recall_harness():
    index = build_index()
    pairs = [
        RecallPair(query=spec.description, positives=(spec.name,))
        for spec in catalog().values()
    ]
    top5 = eval_recall(index, pairs, 5)
    assert top5 >= 0.95
    values = [eval_recall(index, pairs, k) for k in range(1, 22)]
    assert all(a <= b + 1e-12 for a, b in zip(values, values[1:]))
    _report(
        f"recall harness: description-derived top-5 recall {top5:.4f} >= 0.95 "
        "and monotone in k (reference embedder property)"
    )


def test_table_scenarios_end_to_end():
    start = time.perf_counter()
    results = scenarios.run_all()
    failed = [(r.name, r.failures) for r in results if not r.passed]
    assert not failed, failed
    assert len(results) == 9
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0
    _report(f"all 9 business scenario scripts pass on fixture F1 ({elapsed:.1f} s)")


def test_fault_recovery():
    # fail_once on every api each script touches: the turn still succeeds
    for name, scenario in scenarios.SCENARIOS.items():
        for api in scenario.uses_apis:
            result = scenarios.run_scenario(name, fault=(api, "fail_once"))
            assert result.passed, (name, api, result.failures)

    # fail_always: graceful error reply, session stays usable
    sim = OfficeSimulator(scenarios.FIXTURE, scenarios.SEED)
    orch = Orchestrator(sim)
    sim.inject_fault("search_email", "fail_always")
    session = orch.create_session()
    trace = orch.handle_message(session.id, "Search for the emails I received today")
    assert not trace.turn.calls[-1][1].ok
    assert trace.turn.reply.startswith("Sorry")
    sim.clear_faults()
    trace2 = orch.handle_message(session.id, "Search for the emails I received today")
    assert trace2.turn.calls[-1][1].ok
    _report(
        "fault recovery: fail_once repaired within the turn for every scripted api; "
        "fail_always degrades gracefully and the session stays usable"
    )


def test_annotation_round_trip():
    samples = datagen.run_flow("mixed", 100, seed=1, noise=0.0)
    doc = annotation.export_annotation(samples)  # schema-validates internally
    for task in doc:
        dialogue = task["data"]["dialogue"]
        for block in task["predictions"]:
            for item in block["result"]:
                if item["type"] == "labels":
                    v = item["value"]
                    assert dialogue[v["start"] : v["end"]] == v["text"]
    back = annotation.import_annotation(doc)
    a = "\n".join(json.dumps(s.to_dict(), sort_keys=True) for s in samples)
    b = "\n".join(json.dumps(s.to_dict(), sort_keys=True) for s in back)
    assert a == b  # byte-identical
    _report(
        "annotation round-trip: 100 samples export, schema-validate, and re-import "
        "byte-identically; every span slices to its labeled value"
    )

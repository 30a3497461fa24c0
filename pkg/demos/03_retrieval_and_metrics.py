"""Tool retrieval and the metric suite, stage by stage.

Builds the hashing-embedder index over the 21-tool catalog, shows a top-k
ranking, evaluates recall at several depths, and prints the evaluation report
tables for a small generated corpus.
"""

from officeagents import datagen, replay, report, retrieval
from officeagents.catalog import catalog

index = retrieval.build_index()
print(f"index: {index.embedder_id}, {len(index.names)} tools\n")

query = "summarize the emails I received today"
print(f"top-5 for {query!r}:")
for name, score in retrieval.recall(index, query, 5):
    print(f"  {score:.3f}  {name}")

pairs = [
    retrieval.RecallPair(query=spec.description, positives=(spec.name,))
    for spec in catalog().values()
]
print("\ndescription-derived recall:")
for k in (1, 3, 5):
    print(f"  top-{k}: {retrieval.eval_recall(index, pairs, k):.4f}")

samples = datagen.run_flow("mixed", 150, seed=2)
scores = replay.replay_samples(samples).scores()
print()
print(report.render_reports([
    report.build_rewrite_report(scores),
    report.build_planner_report(scores),
    report.build_solver_report(scores),
]))

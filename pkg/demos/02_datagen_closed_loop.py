"""Generate dialogue data and verify the closed loop.

At noise level 0 the reference pipeline reproduces every gold field of the
generated samples exactly; at higher noise the colloquial perturbations pull
each metric below 1.0. This demonstrates both, plus transition-combination
coverage bookkeeping.
"""

from officeagents import datagen, replay
from officeagents.datagen import coverage_report

for noise in (0.0, 0.3):
    samples = datagen.run_flow("mixed", 300, seed=1, noise=noise)
    scores = replay.replay_samples(samples).scores()
    print(f"\nnoise={noise}  ({len(samples)} samples)")
    for key in ("relate_acc", "sub_tasks_num_acc", "api_acc", "strict_accuracy"):
        print(f"  {key:20s} {scores[key]:.4f}")

samples = datagen.run_flow("todo", 20, seed=5)
print("\nexample generated dialogue (todo transition):")
for sample in samples:
    if sample.kind == "multi_turn" and sample.turns[-1].gold_related:
        for turn in sample.turns:
            print(f"  user> {turn.user_text}")
            print(f"    rewritten: {turn.gold_rewritten}")
            print(f"    calls:     {[c.api_name for c in turn.gold_calls]}")
        break

coverage = coverage_report(datagen.run_flow("todo", 60, seed=5))
print("\ncombination coverage after 60 todo samples:")
for key, combos in sorted(coverage.items()):
    print(f"  {key}: {len(combos)} distinct combinations")

"""Annotation-platform export: spans, choices, relations.

Exports a few generated samples as annotation tasks, prints one rendered
dialogue with its span labels, and demonstrates applying an annotator's
API-error correction back onto the sample.
"""

import json

from officeagents import annotation, datagen

samples = datagen.run_flow("email", 6, seed=3)
doc = annotation.export_annotation(samples)

task = doc[3]
print("dialogue text:")
print(task["data"]["dialogue"])
print("\nspan labels:")
for item in task["predictions"][0]["result"]:
    if item["type"] == "labels":
        v = item["value"]
        print(f"  [{v['labels'][0]:>16s}] {v['text']!r} @ {v['start']}..{v['end']}")
    elif item["type"] == "relation":
        print(f"  [{'relation':>16s}] {item['from_id']} -> {item['to_id']} ({item['labels'][0]})")

choice = next(i for i in task["predictions"][0]["result"] if i["type"] == "choices")
edited = json.loads(json.dumps(choice))
edited["value"] = {"choices": ["API error"]}
edited["corrected"] = "summary_email"
task["annotations"] = [{"result": [edited]}]

before = datagen.DialogueSample.from_dict(task["data"]["sample"])
after = annotation.import_annotation(doc)[3]
t, c = edited["call_ref"][1:].split("C")
ti, ci = int(t) - 1, int(c) - 1
print(
    f"\nannotator marked call {edited['call_ref']} as API error: "
    f"{before.turns[ti].gold_calls[ci].api_name} -> {after.turns[ti].gold_calls[ci].api_name}"
)

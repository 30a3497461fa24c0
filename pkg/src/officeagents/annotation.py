"""Annotation-platform export and import for dialogue samples.

Export renders each sample into a task document shaped like the open
annotation platforms expect: ``{id, data, predictions: [{result: [...]}]}``
with three item categories inside ``result``:

* label spans (``api_name``, ``arg_name``, ``arg_value``, ``mention``, and
  their ``missed_*`` variants when a value is not grounded in the query text),
  each slicing exactly to its labeled value inside ``data.dialogue``;
* per-call choices (``API correct`` / ``API error``);
* relations (``related``) linking each grounded ``arg_value`` to its mention.

``data.sample`` carries the full sample, so importing an unedited export is
lossless. Edits are read from the ``annotations`` section: API-error choices
(with a ``corrected`` api) flip the gold API, and edited ``arg_value`` spans
rewrite the corresponding gold argument.
"""

from __future__ import annotations

import json
from importlib import resources
from typing import Optional

import jsonschema

from .catalog import get_tool
from .datagen import DialogueSample
from .types import SubTask, Plan, ToolCall

LABELS = (
    "api_name",
    "arg_name",
    "arg_value",
    "mention",
    "missed_arg_name",
    "missed_arg_value",
    "missed_mention",
)


def _value_str(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, list):
        return " and ".join(str(v) for v in value)
    return str(value)


def _parse_value(text: str, api: str, param: str):
    kind = get_tool(api).param(param).value_kind
    if kind == "boolean":
        return text == "true"
    if kind == "integer":
        return int(text)
    if kind in ("id-list", "string-list"):
        return [t for t in text.split(" and ") if t]
    return text


class _TaskBuilder:
    def __init__(self, sample: DialogueSample):
        self.sample = sample
        self.lines: list[str] = []
        self.offset = 0
        self.items: list[dict] = []
        self.counter = 0

    def _add_line(self, text: str) -> int:
        start = self.offset
        self.lines.append(text)
        self.offset += len(text) + 1  # newline
        return start

    def _span(self, label: str, start: int, end: int, text: str, **extra) -> dict:
        self.counter += 1
        item = {
            "id": f"r{self.counter}",
            "type": "labels",
            "value": {"start": start, "end": end, "text": text, "labels": [label]},
        }
        item.update(extra)
        self.items.append(item)
        return item

    def build(self) -> dict:
        for t_no, turn in enumerate(self.sample.turns, start=1):
            user_start = self._add_line(f"[T{t_no}] user: {turn.user_text}")
            user_prefix = len(f"[T{t_no}] user: ")
            self._add_line(f"[T{t_no}] rewritten: {turn.gold_rewritten}")
            searchable = turn.user_text

            for c_no, call in enumerate(turn.gold_calls, start=1):
                parts = [f"[T{t_no}] call {c_no}: {call.api_name}"]
                arg_items = []
                for param, value in call.args.items():
                    parts.append(f"{param} = {_value_str(value)}")
                line = " | ".join(parts)
                line_start = self._add_line(line)

                api_start = line_start + len(f"[T{t_no}] call {c_no}: ")
                api_span = self._span(
                    "api_name",
                    api_start,
                    api_start + len(call.api_name),
                    call.api_name,
                    call_ref=f"T{t_no}C{c_no}",
                )
                self.items.append(
                    {
                        "id": f"choice-T{t_no}C{c_no}",
                        "type": "choices",
                        "call_ref": f"T{t_no}C{c_no}",
                        "value": {"choices": ["API correct"]},
                    }
                )

                cursor = line_start
                for param, value in call.args.items():
                    vstr = _value_str(value)
                    frag = f"{param} = {vstr}"
                    frag_start = line.index(frag, cursor - line_start) + line_start
                    cursor = frag_start + len(frag)
                    grounded = vstr in searchable or vstr in turn.gold_rewritten
                    name_label = "arg_name" if grounded else "missed_arg_name"
                    value_label = "arg_value" if grounded else "missed_arg_value"
                    self._span(name_label, frag_start, frag_start + len(param), param)
                    vstart = frag_start + len(param) + len(" = ")
                    vspan = self._span(
                        value_label,
                        vstart,
                        vstart + len(vstr),
                        vstr,
                        param_ref=f"T{t_no}C{c_no}:{param}",
                    )
                    if grounded and vstr in searchable:
                        m_start = user_start + user_prefix + searchable.index(vstr)
                        mention = self._span("mention", m_start, m_start + len(vstr), vstr)
                        self.items.append(
                            {
                                "type": "relation",
                                "from_id": vspan["id"],
                                "to_id": mention["id"],
                                "labels": ["related"],
                            }
                        )
        dialogue = "\n".join(self.lines)
        return {
            "id": self.sample.sample_id,
            "data": {"dialogue": dialogue, "sample": self.sample.to_dict()},
            "predictions": [{"model_version": "reference", "result": self.items}],
        }


def export_annotation(samples: list[DialogueSample]) -> list[dict]:
    doc = [_TaskBuilder(s).build() for s in samples]
    validate_annotation(doc)
    return doc


def export_annotation_file(samples: list[DialogueSample], path: str) -> None:
    with open(path, "w") as fh:
        json.dump(export_annotation(samples), fh, indent=2, sort_keys=True)


def load_schema() -> dict:
    raw = resources.files("officeagents.data").joinpath("annotation_schema.json").read_text()
    return json.loads(raw)


def validate_annotation(doc: list[dict]) -> None:
    """Schema-check plus span integrity. Machine predictions must slice
    exactly to their text; human annotation edits may carry corrected text,
    so only their offsets are bounds-checked."""
    jsonschema.validate(doc, load_schema())
    for task in doc:
        dialogue = task["data"]["dialogue"]
        by_id = {}
        for section in ("predictions", "annotations"):
            for block in task.get(section, []):
                for item in block.get("result", []):
                    if item.get("type") == "labels":
                        value = item["value"]
                        if not 0 <= value["start"] <= value["end"] <= len(dialogue):
                            raise ValueError(
                                f"task {task['id']}: span {item.get('id')} offsets out of range"
                            )
                        if (
                            section == "predictions"
                            and dialogue[value["start"] : value["end"]] != value["text"]
                        ):
                            raise ValueError(
                                f"task {task['id']}: span {item.get('id')} does not slice to its text"
                            )
                        by_id[item.get("id")] = item
                    elif item.get("type") == "relation":
                        if item["from_id"] not in by_id or item["to_id"] not in by_id:
                            raise ValueError(
                                f"task {task['id']}: relation links a missing span"
                            )


def _apply_edits(sample: DialogueSample, result_items: list[dict]) -> DialogueSample:
    def locate(call_ref: str) -> tuple[int, int]:
        t_no, c_no = call_ref[1:].split("C")
        return int(t_no) - 1, int(c_no) - 1

    for item in result_items:
        if item.get("type") == "choices" and "API error" in item["value"].get("choices", []):
            corrected = item.get("corrected")
            if not corrected:
                continue
            ti, ci = locate(item["call_ref"])
            turn = sample.turns[ti]
            old = turn.gold_calls[ci]
            turn.gold_calls[ci] = ToolCall(api_name=corrected, args=dict(old.args))
            if turn.gold_plan is not None:
                subs = list(turn.gold_plan.sub_tasks)
                if ci < len(subs):
                    st = subs[ci]
                    subs[ci] = SubTask(
                        index=st.index,
                        text=st.text,
                        api_name=corrected,
                        depends_on=st.depends_on,
                    )
                    turn.gold_plan = Plan(sub_tasks=tuple(subs))
        elif item.get("type") == "labels" and item.get("param_ref"):
            call_ref, param = item["param_ref"].split(":")
            ti, ci = locate(call_ref)
            turn = sample.turns[ti]
            call = turn.gold_calls[ci]
            new_value = _parse_value(item["value"]["text"], call.api_name, param)
            if call.args.get(param) != new_value:
                args = dict(call.args)
                args[param] = new_value
                turn.gold_calls[ci] = ToolCall(api_name=call.api_name, args=args)
    return sample


def import_annotation(doc: list[dict]) -> list[DialogueSample]:
    """Rebuild samples from an export, applying any annotation edits."""
    validate_annotation(doc)
    samples = []
    for task in doc:
        sample = DialogueSample.from_dict(task["data"]["sample"])
        for block in task.get("annotations", []):
            _apply_edits(sample, block.get("result", []))
        samples.append(sample)
    return samples


def import_annotation_file(path: str) -> list[DialogueSample]:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"malformed annotation file: {exc}") from None
    return import_annotation(doc)

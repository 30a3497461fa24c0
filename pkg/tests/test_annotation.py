import json

import pytest

from officeagents import annotation, datagen


@pytest.fixture(scope="module")
def corpus():
    return datagen.run_flow("mixed", 40, seed=41, noise=0.0)


@pytest.fixture(scope="module")
def export(corpus):
    return annotation.export_annotation(corpus)


def test_export_passes_schema_validation(export):
    annotation.validate_annotation(export)  # does not raise


def test_every_span_slices_to_its_text(export):
    for task in export:
        dialogue = task["data"]["dialogue"]
        for block in task["predictions"]:
            for item in block["result"]:
                if item["type"] == "labels":
                    v = item["value"]
                    assert dialogue[v["start"] : v["end"]] == v["text"]


def test_relations_link_existing_spans(export):
    for task in export:
        ids = {
            item["id"]
            for block in task["predictions"]
            for item in block["result"]
            if item["type"] == "labels"
        }
        for block in task["predictions"]:
            for item in block["result"]:
                if item["type"] == "relation":
                    assert item["from_id"] in ids and item["to_id"] in ids


def test_three_annotation_categories_present(export):
    kinds = {
        item["type"]
        for task in export
        for block in task["predictions"]
        for item in block["result"]
    }
    assert kinds == {"labels", "choices", "relation"}


def test_round_trip_unedited_is_byte_identical(corpus, export):
    back = annotation.import_annotation(json.loads(json.dumps(export)))
    a = "\n".join(json.dumps(s.to_dict(), sort_keys=True) for s in corpus)
    b = "\n".join(json.dumps(s.to_dict(), sort_keys=True) for s in back)
    assert a == b


def test_api_error_choice_flips_the_api(corpus):
    doc = annotation.export_annotation(corpus[:1])
    task = doc[0]
    choice = next(
        i for i in task["predictions"][0]["result"] if i["type"] == "choices"
    )
    edited = dict(choice)
    edited["value"] = {"choices": ["API error"]}
    edited["corrected"] = "find_todo"
    task["annotations"] = [{"result": [edited]}]
    back = annotation.import_annotation(doc)
    ti, ci = 0, 0
    assert back[0].turns[ti].gold_calls[ci].api_name == "find_todo"
    assert back[0].turns[ti].gold_plan.sub_tasks[ci].api_name == "find_todo"


def test_arg_value_span_edit_rewrites_argument(corpus):
    # find a task with a string-valued arg span
    doc = annotation.export_annotation(corpus)
    for task in doc:
        spans = [
            i
            for i in task["predictions"][0]["result"]
            if i["type"] == "labels"
            and i.get("param_ref")
            and i["value"]["labels"][0] in ("arg_value", "missed_arg_value")
        ]
        if not spans:
            continue
        span = spans[0]
        call_ref, param = span["param_ref"].split(":")
        sample = datagen.DialogueSample.from_dict(task["data"]["sample"])
        ti = int(call_ref[1 : call_ref.index("C")]) - 1
        ci = int(call_ref[call_ref.index("C") + 1 :]) - 1
        kind = None
        from officeagents.catalog import get_tool

        api = sample.turns[ti].gold_calls[ci].api_name
        kind = get_tool(api).param(param).value_kind
        if kind not in ("string", "person", "id"):
            continue
        edited = json.loads(json.dumps(span))
        edited["value"]["text"] = "edited value"
        task["annotations"] = [{"result": [edited]}]
        back = annotation.import_annotation(doc)
        assert back[task["id"] if False else doc.index(task)].turns[ti].gold_calls[ci].args[
            param
        ] == "edited value"
        return
    pytest.fail("no editable string arg span found in the corpus")


def test_malformed_file_raises(tmp_path):
    bad = tmp_path / "broken.json"
    bad.write_text("{not json")
    with pytest.raises(ValueError):
        annotation.import_annotation_file(str(bad))


def test_file_round_trip(tmp_path, corpus):
    path = tmp_path / "tasks.json"
    annotation.export_annotation_file(corpus, str(path))
    back = annotation.import_annotation_file(str(path))
    assert [s.to_dict() for s in back] == [s.to_dict() for s in corpus]


def test_schema_rejects_bad_spans(export):
    doc = json.loads(json.dumps(export[:1]))
    doc[0]["predictions"][0]["result"].append(
        {"id": "zz", "type": "labels", "value": {"start": 0, "end": 1, "text": "x", "labels": ["nonsense"]}}
    )
    with pytest.raises(Exception):
        annotation.validate_annotation(doc)


def test_span_offset_integrity_enforced(export):
    doc = json.loads(json.dumps(export[:1]))
    for block in doc[0]["predictions"]:
        for item in block["result"]:
            if item["type"] == "labels":
                item["value"]["text"] = "tampered"
                break
        break
    with pytest.raises(ValueError):
        annotation.validate_annotation(doc)

"""Report rendering: text layout goldens, JSON schema, metrics table."""

from __future__ import annotations

import json
from pathlib import Path

from clonewright.config import Thresholds
from clonewright.detector import detect, metrics
from clonewright.project import Project
from clonewright.report import (
    build_report,
    render_class_text,
    render_json,
    render_metrics,
    render_text,
)

GOLDENS = Path(__file__).parent / "goldens"

THREE_INSTANCE = """-module(suite).

t1(FilterAtom1, FilterAtom2) ->
  prepare(FilterAtom1, [1, 2], {deep, state, 9}),
  code_is_loaded(sgc, om, FilterAtom1, true),
  code_is_loaded(mp, om, FilterAtom1, false),
  code_is_loaded(sgc, om, FilterAtom2, true),
  code_is_loaded(mp, om, FilterAtom2, false).

t2(FilterAtom1, FilterAtom2) ->
  audit(FilterAtom2, [3, 4], {deep, trace, 8}),
  code_is_loaded(sgc, om, FilterAtom1, false),
  code_is_loaded(mp, om, FilterAtom1, false),
  code_is_loaded(sgc, om, FilterAtom2, true),
  code_is_loaded(mp, om, FilterAtom2, false).

t3(FilterAtom1, FilterAtom2) ->
  warmup({FilterAtom1, FilterAtom2}, [5], {shallow, probe, 7}),
  code_is_loaded(sgc, om, FilterAtom1, true),
  code_is_loaded(mp, om, FilterAtom1, false),
  code_is_loaded(sgc, om, FilterAtom2, false),
  code_is_loaded(mp, om, FilterAtom2, false).
"""

TWO_INSTANCE = """-module(pingpong).

pong_loop(Msg, N) ->
  io:format("pong!~n"),
  timer:sleep(500),
  a ! {msg, Msg, N - 1}.

ping_loop(Msg, N) ->
  io:format("ping...~n"),
  timer:sleep(500),
  b ! {msg, Msg, N - 1}.
"""


def report_for(texts, thresholds, order="size"):
    project = Project.from_texts(texts)
    classes = detect(project, thresholds)
    return project, classes, build_report(project, classes, order)


def check_golden(name: str, text: str) -> None:
    path = GOLDENS / name
    assert path.is_file(), f"golden {name} missing"
    assert text == path.read_text(encoding="utf-8")


class TestTextReport:
    def test_three_instances_cloned_twice_golden(self):
        _, classes, doc = report_for(
            {"suite.mel": THREE_INSTANCE}, Thresholds(min_len=4, min_toks=0)
        )
        assert len(classes) == 1
        text = render_text(doc)
        assert "This code has been cloned twice:" in text
        check_golden("report_three_instances.txt", text)

    def test_two_instances_cloned_once_golden(self):
        _, classes, doc = report_for(
            {"pingpong.mel": TWO_INSTANCE}, Thresholds(min_len=3, min_toks=10)
        )
        text = render_text(doc)
        assert "This code has been cloned once:" in text
        check_golden("report_two_instances.txt", text)

    def test_many_instances_use_numerals(self):
        body = "alpha(K, 1),\n  beta(K, 2),\n  gamma(K, 3)"
        funs = "\n\n".join(f"t{i}(K) ->\n  {body}." for i in range(5))
        _, classes, doc = report_for(
            {"m.mel": f"-module(m).\n\n{funs}\n"}, Thresholds(min_len=3, min_toks=0)
        )
        assert "This code has been cloned 4 times:" in render_text(doc)

    def test_empty_report(self):
        _, _, doc = report_for({}, Thresholds())
        assert render_text(doc) == "No clones found.\n"

    def test_cross_module_suffix(self):
        shared = "go:prep(I, 1),\n  go:launch(I, 2),\n  go:land(I, 3)"
        texts = {
            "a.mel": f"-module(a).\n\nf(I) ->\n  {shared}.\n",
            "b.mel": f"-module(b).\n\ng(I) ->\n  {shared}.\n",
        }
        _, classes, doc = report_for(texts, Thresholds(min_len=3, min_toks=0))
        first_line = render_text(doc).splitlines()[0]
        assert first_line.endswith(": (cross-module)")

    def test_streamed_block_equals_report_block(self):
        _, classes, doc = report_for(
            {"suite.mel": THREE_INSTANCE}, Thresholds(min_len=4, min_toks=0)
        )
        assert render_text(doc) == render_class_text(doc.entries[0])


class TestJsonReport:
    def test_schema_and_roundtrip(self):
        _, classes, doc = report_for(
            {"pingpong.mel": TWO_INSTANCE}, Thresholds(min_len=3, min_toks=10)
        )
        text = render_json(doc)
        payload = json.loads(text)
        assert set(payload) == {"classes"}
        (cls,) = payload["classes"]
        assert set(cls) == {
            "instances",
            "template",
            "similarity",
            "newParams",
            "totalParams",
            "sizeLoc",
            "kind",
        }
        assert cls["newParams"] == 2
        assert cls["totalParams"] == 4
        assert cls["kind"] == "intra-module"
        assert len(cls["instances"]) == 2  # raw count, not count-1
        for inst in cls["instances"]:
            assert set(inst) == {"file", "span", "actuals"}
            assert len(inst["actuals"]) == 4

    def test_similarity_four_decimals(self):
        _, classes, doc = report_for(
            {"pingpong.mel": TWO_INSTANCE}, Thresholds(min_len=3, min_toks=10)
        )
        assert '"similarity": 1.0000'.replace('"similarity": ', "") in render_json(doc)
        assert '"similarity"' in render_json(doc)
        assert "1.0000" in render_json(doc)

    def test_empty_json(self):
        _, _, doc = report_for({}, Thresholds())
        assert json.loads(render_json(doc)) == {"classes": []}

    def test_counts_agree_with_text(self):
        _, classes, doc = report_for(
            {"suite.mel": THREE_INSTANCE}, Thresholds(min_len=4, min_toks=0)
        )
        payload = json.loads(render_json(doc))
        text = render_text(doc)
        for cls in payload["classes"]:
            locations = [f"{i['file']}:{i['span']}:" for i in cls["instances"]]
            for loc in locations:
                assert loc in text


class TestOrdering:
    def corpus(self):
        small = "s1(K),\n  s2(K),\n  s3(K)"
        big = "b1(K),\n  b2(K),\n  b3(K),\n  b4(K),\n  b5(K)"
        funs = [f"m{i}(K) ->\n  {small}." for i in range(3)]
        funs += [f"g{i}(K) ->\n  {big}." for i in range(2)]
        return {"m.mel": "-module(m).\n\n" + "\n\n".join(funs) + "\n"}

    def test_order_by_size_and_frequency(self):
        project = Project.from_texts(self.corpus())
        classes = detect(project, Thresholds(min_len=3, min_toks=0))
        by_size = build_report(project, classes, "size")
        by_freq = build_report(project, classes, "freq")
        assert [e.cls.size_loc for e in by_size.entries] == sorted(
            (e.cls.size_loc for e in by_size.entries), reverse=True
        )
        assert [e.cls.occurrences for e in by_freq.entries] == sorted(
            (e.cls.occurrences for e in by_freq.entries), reverse=True
        )


class TestMetricsRendering:
    def test_table_columns_and_rows(self):
        project = Project.from_texts({"suite.mel": THREE_INSTANCE})
        classes = detect(project, Thresholds(min_len=4, min_toks=0))
        text = render_metrics(metrics(classes))
        lines = text.splitlines()
        assert lines[0].split("  ") == [
            "",
            "",
            "",
            "Size (LOC)",
            "Occurrences",
            "Total parameters",
            "New parameters",
        ] or "Size (LOC)" in lines[0]
        assert any(line.startswith("Median") for line in lines)
        assert any(line.startswith("Most occurring clone") for line in lines)
        assert lines[-1].startswith("Number of clones")

    def test_empty_table_renders_na(self):
        text = render_metrics(metrics([]))
        assert "n/a" in text
        last = text.splitlines()[-1]
        assert last.startswith("Number of clones") and last.endswith("0")

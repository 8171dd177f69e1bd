"""Command-line behaviour: flags, exit codes, and on-disk effects."""

from __future__ import annotations

import json
import os
import stat
from pathlib import Path

import pytest

from clonewright.cli import main

PINGPONG = """-module(pingpong).

pong_loop(Msg, N) ->
  io:format("pong!~n"),
  timer:sleep(500),
  a ! {msg, Msg, N - 1}.

ping_loop(Msg, N) ->
  io:format("ping...~n"),
  timer:sleep(500),
  b ! {msg, Msg, N - 1}.
"""

NEW_FUN_PASTED = PINGPONG + """
new_fun(Msg, N, NewVar_1, NewVar_2) ->
  io:format(NewVar_1),
  timer:sleep(500),
  NewVar_2 ! {msg, Msg, N - 1}.
"""

LOADED_CHECKS = """-module(checks).

t1(Atom1, Atom2) ->
  setup_env(Atom1, 1, {fast, [a, b], 9}),
  loaded(sgc, Atom1, true),
  loaded(mp, Atom1, false),
  loaded(sgc, Atom2, true),
  loaded(mp, Atom2, false).

t2(Atom1, Atom2) ->
  make_fixture(Atom1, Atom2, 9, [x, {y, 1}]),
  loaded(sgc, Atom1, false),
  loaded(mp, Atom1, false),
  loaded(sgc, Atom2, true),
  loaded(mp, Atom2, false).

t3(Atom1, Atom2) ->
  audit([Atom1, Atom2], 3, {deep, {nested, 4}}),
  loaded(sgc, Atom1, true),
  loaded(mp, Atom1, false),
  loaded(sgc, Atom2, false),
  loaded(mp, Atom2, false).
"""


@pytest.fixture()
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def write(workdir: Path, name: str, text: str) -> Path:
    path = workdir / name
    path.write_text(text, encoding="utf-8")
    return path


class TestDetectCommand:
    def test_empty_directory(self, workdir, capsys):
        (workdir / "src").mkdir()
        assert main(["detect", "src"]) == 0
        assert "No clones found." in capsys.readouterr().out

    def test_streams_blocks_and_counts(self, workdir, capsys):
        write(workdir, "pingpong.mel", PINGPONG)
        code = main(["detect", "--min-len", "3", "--min-toks", "10", "pingpong.mel"])
        out = capsys.readouterr().out
        assert code == 0
        assert "This code has been cloned once:" in out
        assert "1 clone classes found." in out

    def test_lower_similarity_reports_superset(self, workdir, capsys):
        write(workdir, "checks.mel", LOADED_CHECKS)
        main(["detect", "--sim", "0.8", "--json", "strict.json", "checks.mel"])
        main(["detect", "--sim", "0.5", "--json", "loose.json", "checks.mel"])
        capsys.readouterr()
        strict = json.loads((workdir / "strict.json").read_text())
        loose = json.loads((workdir / "loose.json").read_text())
        strict_keys = {
            tuple((i["file"], i["span"]) for i in c["instances"])
            for c in strict["classes"]
        }
        loose_keys = {
            tuple((i["file"], i["span"]) for i in c["instances"])
            for c in loose["classes"]
        }
        assert strict_keys <= loose_keys
        assert len(loose_keys) > len(strict_keys)

    def test_report_file_has_both_orderings(self, workdir, capsys):
        write(workdir, "pingpong.mel", PINGPONG)
        main([
            "detect", "--min-len", "3", "--min-toks", "10",
            "--report", "report.txt", "pingpong.mel",
        ])
        capsys.readouterr()
        report = (workdir / "report.txt").read_text()
        assert "=== Clones by instance size ===" in report
        assert "=== Clones by frequency ===" in report

    def test_incremental_creates_cache(self, workdir, capsys):
        write(workdir, "pingpong.mel", PINGPONG)
        args = ["detect", "--min-len", "3", "--min-toks", "10", "--incremental", "pingpong.mel"]
        assert main(args) == 0
        first = capsys.readouterr().out
        assert (workdir / ".clonewright" / "cache").is_file()
        assert main(args) == 0
        assert capsys.readouterr().out == first

    def test_unknown_flag_exits_2(self, workdir):
        with pytest.raises(SystemExit) as exc:
            main(["detect", "--bogus", "x"])
        assert exc.value.code == 2

    def test_config_file_defaults(self, workdir, capsys):
        write(workdir, "pingpong.mel", PINGPONG)
        write(workdir, ".clonewright.toml", "min_len = 3\nmin_toks = 10\n")
        assert main(["detect", "pingpong.mel"]) == 0
        assert "1 clone classes found." in capsys.readouterr().out


class TestSearchCommand:
    def test_search_finds_class_detection_misses(self, workdir, capsys):
        write(workdir, "checks.mel", LOADED_CHECKS)
        assert main(["detect", "checks.mel"]) == 0
        assert "No clones found." in capsys.readouterr().out
        assert main(["search", "--at", "checks.mel:5.3-8.27", "checks.mel"]) == 0
        out = capsys.readouterr().out
        assert "This code has been cloned twice:" in out

    def test_partial_selection_is_domain_error(self, workdir, capsys):
        write(workdir, "checks.mel", LOADED_CHECKS)
        assert main(["search", "--at", "checks.mel:5.3-8.20", "checks.mel"]) == 1
        assert "whole expression" in capsys.readouterr().err


class TestRefactorCommands:
    def test_fold_updates_files(self, workdir, capsys):
        write(workdir, "pingpong.mel", NEW_FUN_PASTED)
        assert main(["fold", "pingpong:new_fun/4", "pingpong.mel"]) == 0
        text = (workdir / "pingpong.mel").read_text()
        assert 'new_fun(Msg, N, "pong!~n", a)' in text
        assert 'new_fun(Msg, N, "ping...~n", b)' in text

    def test_fold_instance_selection(self, workdir, capsys):
        write(workdir, "pingpong.mel", NEW_FUN_PASTED)
        assert main(["fold", "pingpong:new_fun/4", "--instances", "0", "pingpong.mel"]) == 0
        text = (workdir / "pingpong.mel").read_text()
        assert 'new_fun(Msg, N, "pong!~n", a)' in text
        assert 'new_fun(Msg, N, "ping...~n", b)' not in text

    def test_swap_identity_is_noop_success(self, workdir, capsys):
        src = "-module(m).\n\nf(A, B, C) ->\n  use(A, B, C).\n"
        write(workdir, "m.mel", src)
        assert main(["swap", "f/3", "2", "2", "m.mel"]) == 0
        assert "no changes" in capsys.readouterr().out
        assert (workdir / "m.mel").read_text() == src

    def test_rename_fn_and_var(self, workdir, capsys):
        write(workdir, "pingpong.mel", NEW_FUN_PASTED)
        assert main(
            ["rename-fn", "pingpong", "new_fun/4", "send_round", "pingpong.mel"]
        ) == 0
        assert "send_round(Msg, N, NewVar_1, NewVar_2)" in (workdir / "pingpong.mel").read_text()
        # NewVar_1 defining occurrence: parameters of send_round
        text = (workdir / "pingpong.mel").read_text()
        line = next(
            i + 1 for i, l in enumerate(text.splitlines()) if "send_round(" in l
        )
        col = text.splitlines()[line - 1].index("NewVar_1") + 1
        assert main(
            ["rename-var", f"pingpong.mel:{line}.{col}", "Greeting", "pingpong.mel"]
        ) == 0
        assert "io:format(Greeting)" in (workdir / "pingpong.mel").read_text()

    def test_read_only_file_refused_with_name(self, workdir, capsys):
        path = write(workdir, "m.mel", "-module(m).\n\nf(A, B) ->\n  use(A, B).\n")
        os.chmod(path, stat.S_IRUSR | stat.S_IRGRP)
        try:
            assert main(["swap", "f/2", "1", "2", "m.mel"]) == 1
            err = capsys.readouterr().err
            assert "not writable" in err and "m.mel" in err
        finally:
            os.chmod(path, stat.S_IRUSR | stat.S_IWUSR)

    def test_inline_and_extract(self, workdir, capsys):
        src = (
            "-module(m).\n\n"
            "helper(K) ->\n  prep(K),\n  finish(K, 1).\n\n"
            "g(K) ->\n  start(K),\n  helper(K),\n  stop(K).\n"
        )
        write(workdir, "m.mel", src)
        assert main(["inline", "m.mel:9.3", "m.mel"]) == 0
        text = (workdir / "m.mel").read_text()
        assert "  prep(K),\n  finish(K, 1),\n" in text
        assert main(["extract", "m.mel:8.3-9.18", "warmup", "m.mel"]) == 0
        text2 = (workdir / "m.mel").read_text()
        assert "warmup(K)" in text2

    def test_instances_command(self, workdir, capsys):
        write(workdir, "m.mel", "-module(m).\n\nf() ->\n  X = 1,\n  use(X).\n")
        assert main(["instances", "m.mel:4.3", "m.mel"]) == 0
        out = capsys.readouterr().out
        assert "defining occurrence" in out
        assert out.count("X") == 2


class TestPropsCommand:
    def test_props_writes_file(self, workdir, capsys):
        src = (
            "-module(m).\n\n"
            "f(Config, A) -> use(Config, A).\n\n"
            "t1(Config) -> f(Config, 21).\n\n"
            "t2(Config) -> f(Config, 50).\n"
        )
        write(workdir, "m.mel", src)
        assert main(["props", "--fun", "f/2", "m.mel"]) == 0
        out = capsys.readouterr().out
        assert "oneof([21, 50])" in out
        assert (workdir / "m_props.mel.txt").is_file()

    def test_generalize_flag(self, workdir, capsys):
        src = (
            "-module(m).\n\n"
            "f(Config, A) -> use(Config, A).\n\n"
            "t1(Config) -> f(Config, 21).\n\n"
            "t2(Config) -> f(Config, 50).\n"
        )
        write(workdir, "m.mel", src)
        assert main(["props", "--fun", "f/2", "--generalize-literals", "m.mel"]) == 0
        assert "nat()" in capsys.readouterr().out


class TestMetricsCommand:
    def test_metrics_table(self, workdir, capsys):
        write(workdir, "pingpong.mel", PINGPONG)
        assert main(["metrics", "--min-len", "3", "--min-toks", "10", "pingpong.mel"]) == 0
        out = capsys.readouterr().out
        assert "Size (LOC)" in out
        assert "Number of clones" in out

"""Command-line interface: exit codes, output stability, subcommands."""

import json

import pytest

from elfol.cli import main
from elfol.lexicon import DATA_DIR

CORE = str(DATA_DIR / "core.elf")
AXIOMS = str(DATA_DIR / "axioms.elf")
SCHEMAS = str(DATA_DIR / "schemas.elf")
ENTER = str(DATA_DIR / "scenario-enter.elf")


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestProveCommand:
    def test_provable_goal_exits_zero_with_trace(self, capsys):
        code, out, err = run(
            capsys, "prove", CORE, AXIOMS, ENTER, "--goal", "(contained-in b1 f1)"
        )
        assert code == 0
        assert "axiom-match" in out and "(contained-in b1 f1)" in out

    def test_unprovable_goal_exits_one(self, capsys):
        code, out, err = run(
            capsys, "prove", CORE, AXIOMS, ENTER, "--goal", "(contained-in f1 b1)"
        )
        assert code == 1
        assert "not proved" in out

    def test_parse_error_exits_two_with_span(self, capsys):
        code, out, err = run(
            capsys, "prove", CORE, "--goal", "(contained-in b1"
        )
        assert code == 2
        assert "error" in err

    def test_bad_file_reports_location(self, capsys, tmp_path):
        bad = tmp_path / "bad.elf"
        bad.write_text("(fact (undeclared x))")
        code, out, err = run(capsys, "check", str(bad))
        assert code == 2
        assert "bad.elf" in err

    def test_structured_trace_is_json(self, capsys):
        code, out, err = run(
            capsys, "prove", CORE, AXIOMS, ENTER,
            "--goal", "(contained-in b1 f1)", "--structured",
        )
        assert code == 0
        record = json.loads(out)
        assert set(record) == {"rule", "formula", "children", "lexical_steps"}


class TestDemoCommand:
    def test_all_queries_pass(self, capsys):
        code, out, err = run(capsys, "demo")
        assert code == 0
        assert "queries as expected" in out

    def test_structured_output_is_stable(self, capsys):
        code1, out1, _ = run(capsys, "--structured", "demo")
        code2, out2, _ = run(capsys, "--structured", "demo")
        assert code1 == code2 == 0
        assert out1 == out2
        for line in out1.splitlines():
            record = json.loads(line)
            assert set(record) == {
                "query", "expect", "outcome", "lexical_steps", "explored", "ok"
            }


class TestValidateCommand:
    def test_bundled_schema_valid_up_to_bounds(self, capsys):
        code, out, err = run(
            capsys, "validate", "--schema", "monotone-conj-drop", "--max-domain", "2"
        )
        assert code == 0
        assert "valid up to bounds" in out

    def test_unknown_schema_exits_two(self, capsys):
        code, out, err = run(capsys, "validate", "--schema", "nope")
        assert code == 2


class TestEvalCommand:
    def test_eval_model_file(self, capsys, tmp_path):
        model = tmp_path / "m.elf"
        model.write_text(
            "(model (worlds w0) (acc) (domain d0)\n"
            "  (const a d0)\n"
            "  (pred P (w0 (d0))))\n"
        )
        code, out, err = run(capsys, "eval", "--model", str(model), "--formula", "(P a)")
        assert code == 0 and out.strip() == "true"
        code, out, err = run(
            capsys, "eval", "--model", str(model), "--formula", "(poss (P a))"
        )
        assert code == 0 and out.strip() == "false"


class TestReduceCommand:
    def test_reports_effort_table(self, capsys):
        code, out, err = run(
            capsys, "reduce", "--kb", CORE, AXIOMS, ENTER,
            "--goal", "(contained-in b1 f1)",
            "--domain", "b1,f1", "--worlds", "w0",
        )
        assert code == 0
        assert "extended" in out and "reduced" in out

    def test_structured_reduce(self, capsys):
        code, out, err = run(
            capsys, "reduce", "--kb", CORE, AXIOMS, ENTER,
            "--goal", "(contained-in b1 f1)",
            "--domain", "b1,f1", "--worlds", "w0", "--structured",
        )
        assert code == 0
        lines = out.strip().splitlines()
        assert len(lines) == 3
        first = json.loads(lines[0])
        assert set(first) == {"encoding", "explored", "proof_len", "outcome"}


class TestCheckCommand:
    def test_clean_files(self, capsys):
        code, out, err = run(capsys, "check", CORE, AXIOMS, SCHEMAS, ENTER)
        assert code == 0
        assert "ok:" in out

    def test_env_timeout_fallback(self, capsys, monkeypatch):
        monkeypatch.setenv("ELFOL_TIMEOUT_MS", "9000")
        code, out, err = run(
            capsys, "prove", CORE, AXIOMS, ENTER, "--goal", "(contained-in b1 f1)"
        )
        assert code == 0

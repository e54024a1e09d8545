import json
from pathlib import Path

import pytest

SCHEMA_DIR = Path(__file__).resolve().parent.parent / "docs" / "schemas"

# Populated by tests/test_acceptance.py; echoed after the run so the
# per-criterion verdicts survive pytest's output capture.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def load_schema(name: str) -> dict:
    with open(SCHEMA_DIR / name, encoding="utf-8") as handle:
        return json.load(handle)


@pytest.fixture
def validate_schema():
    """Validator factory: validate_schema(instance, 'eval_report.schema.json')."""
    import jsonschema

    def _validate(instance, schema_name):
        jsonschema.Draft202012Validator(load_schema(schema_name)).validate(instance)

    return _validate


@pytest.fixture
def write_tsv(tmp_path):
    """Write (id, text) rows as a TSV file under tmp_path."""

    def _write(rows, name="data.tsv"):
        path = tmp_path / name
        path.write_text(
            "".join(f"{i}\t{t}\n" for i, t in rows), encoding="utf-8"
        )
        return path

    return _write


@pytest.fixture
def run_cli(capsys):
    """Invoke the CLI in-process; returns (exit_code, stdout, stderr)."""
    from typokit.cli import main

    def _run(*args):
        code = main([str(a) for a in args])
        captured = capsys.readouterr()
        return code, captured.out, captured.err

    return _run

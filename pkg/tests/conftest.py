import json
from pathlib import Path

import pytest

from edmlab import experiments as ex

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"

_ACCEPTANCE: dict = {}


@pytest.fixture
def record():
    """record(cid, ok, detail): one PASS/FAIL line per criterion in the terminal summary."""

    def _record(cid: str, ok: bool, detail: str):
        _ACCEPTANCE[cid] = ("PASS" if ok else "FAIL", detail)
        print(f"{cid} {'PASS' if ok else 'FAIL'} {detail}")

    return _record


@pytest.fixture(scope="session")
def default_run(tmp_path_factory):
    """Run the bundled config for an experiment once per session."""
    cache = {}

    def _run(name: str):
        if name not in cache:
            data = json.loads((CONFIG_DIR / f"{name}.json").read_text())
            data["out_dir"] = str(tmp_path_factory.mktemp(name))
            cache[name] = ex.run_experiment(ex.parse_config(data))
        return cache[name]

    return _run


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_ACCEPTANCE):
        status, detail = _ACCEPTANCE[cid]
        terminalreporter.write_line(f"{cid} {status} {detail}")

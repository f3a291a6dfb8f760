import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ifmsan.manifest import save_model, toy_input, toy_model  # noqa: E402
from ifmsan import ifmt  # noqa: E402

TOY_SEED = 0

# filled by test_acceptance.py, printed at the end of the run
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def toy():
    return toy_model(TOY_SEED), toy_input(TOY_SEED)


@pytest.fixture(scope="session")
def toy_files(tmp_path_factory, toy):
    model, x = toy
    out = tmp_path_factory.mktemp("toy")
    manifest = save_model(model, out)
    ifmt.write(out / "input.ifmt", x)
    return manifest, out / "input.ifmt"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

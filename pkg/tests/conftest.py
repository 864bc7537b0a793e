import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make oracles importable

REPO = Path(__file__).resolve().parents[1]


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return REPO / "fixtures"


@pytest.fixture(scope="session")
def configs_dir() -> Path:
    return REPO / "configs"


@pytest.fixture(scope="session")
def obs_fixture(fixtures_dir) -> Path:
    return fixtures_dir / "memory_observational.csv"


@pytest.fixture(scope="session")
def do_fixture(fixtures_dir) -> Path:
    return fixtures_dir / "memory_interventional.csv"


@pytest.fixture(scope="session")
def ideal_memory_behavior():
    from tpmcert import proclib, process

    op = proclib.w222()
    return process.born_rule(op, proclib.memory_instrument(), proclib.memory_final_povm())

import shutil
import sys
from pathlib import Path

import pytest

from sqlrefine.data import DB_IDS, dataset_path, db_root, mini_dataset_path
from sqlrefine.dataset import database_path
from sqlrefine.schema import introspect_schema

TESTS_DIR = Path(__file__).resolve().parent
FIXTURES = TESTS_DIR / "fixtures"
sys.path.insert(0, str(TESTS_DIR))


@pytest.fixture(scope="session")
def bundled_root() -> Path:
    return db_root()


@pytest.fixture(scope="session")
def dev_path() -> Path:
    return dataset_path()


@pytest.fixture(scope="session")
def mini_path() -> Path:
    return mini_dataset_path()


@pytest.fixture(scope="session")
def schemas(bundled_root):
    return {d: introspect_schema(database_path(bundled_root, d), d) for d in DB_IDS}


@pytest.fixture(scope="session")
def singer_db(bundled_root) -> Path:
    return database_path(bundled_root, "concert_singer")


@pytest.fixture
def scratch_root(tmp_path, bundled_root) -> Path:
    """A private copy of the bundled databases, safe to hash or damage."""
    dest = tmp_path / "databases"
    shutil.copytree(bundled_root, dest, ignore=shutil.ignore_patterns("*.sql"))
    return dest


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS, key=lambda l: int(l.split("criterion ")[1].split()[0])):
            terminalreporter.write_line(line)

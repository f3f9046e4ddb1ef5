import pytest
from pathlib import Path
import os
import sys

# Add source directory to path
sys.path.append(os.path.join(os.path.dirname(__file__), '..'))

from src.business_logic.config_manager import ConfigManager
from src.business_logic.experiment_service import ExperimentService
from src.database.db_manager import DatabaseManager
from src.nuclear_data import load_registry_file

ROOT = Path(__file__).resolve().parents[1]
SCENARIO_DIR = ROOT / 'scenarios'
GOLDEN_DIR = Path(__file__).resolve().parent / 'golden'


@pytest.fixture(scope='session')
def registry():
    """Shipped nuclear data"""
    return load_registry_file()


@pytest.fixture(scope='session')
def scenario_dir():
    return SCENARIO_DIR


@pytest.fixture(scope='session')
def golden_dir():
    return GOLDEN_DIR


@pytest.fixture
def scenario_text():
    """Read a shipped scenario by name"""
    def read(name: str) -> str:
        return (SCENARIO_DIR / f'{name}.scn').read_text(encoding='utf-8')
    return read


@pytest.fixture
def config_manager(tmp_path):
    """Settings file and log directory inside the test's temporary directory"""
    config = ConfigManager(tmp_path / 'config' / 'settings.json')
    config.set_setting('logging.directory', str(tmp_path / 'logs'))
    config.set_setting('database.url', f"sqlite:///{tmp_path / 'runs.db'}")
    return config


@pytest.fixture
def experiment_service(config_manager, registry):
    """ExperimentService sharing the session registry"""
    return ExperimentService(config_manager, registry=registry)


@pytest.fixture
def test_db():
    """In-memory run ledger database"""
    db_manager = DatabaseManager()
    db_manager.initialize('sqlite://')
    yield db_manager
    db_manager.dispose()


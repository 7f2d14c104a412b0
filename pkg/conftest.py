import os
import sys

import pytest

ROOT = os.path.dirname(os.path.abspath(__file__))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

@pytest.fixture
def scenario_dir():
    return os.path.join(ROOT, 'scenarios')

@pytest.fixture(autouse=True)
def no_seed_env(monkeypatch):
    # A DIANA_SEED exported in the developer's shell must not leak into tests.
    monkeypatch.delenv('DIANA_SEED', raising=False)

import os
import sys

import pytest

# Add src to path so the packages import the same way main.py does
sys.path.insert(0, os.path.join(os.path.dirname(os.path.dirname(__file__)), 'src'))


class ScriptedRng:
    """Stands in for a generator: random() returns the scripted uniforms in order."""

    def __init__(self, draws):
        self.draws = list(draws)
        self.used = 0

    def random(self, size=None):
        if size is not None:
            raise TypeError("ScriptedRng only serves scalar draws")
        value = self.draws[self.used]
        self.used += 1
        return value


@pytest.fixture
def scripted_rng():
    return ScriptedRng


@pytest.fixture
def write_config(tmp_path):
    """Write KEY=VALUE lines to a config file and return its path."""
    def _write(name="experiment.env", **values):
        path = tmp_path / name
        path.write_text("".join(f"{k}={v}\n" for k, v in values.items()), encoding="utf-8")
        return str(path)
    return _write

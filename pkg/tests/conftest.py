import os

# allow the multi-thread determinism checks even on a single-core box;
# must be set before numba is imported
os.environ.setdefault("NUMBA_NUM_THREADS", "8")

import hypothesis  # noqa: E402
import numpy as np  # noqa: E402
import pytest  # noqa: E402

hypothesis.settings.register_profile("default", max_examples=40, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


class ForcedStream:
    """RNG stream with scripted uniforms.

    ``marriage`` is the (u1, u2) pair returned for every marriage proposal;
    ``spells`` is a list of spell uniforms (the last one repeats).
    """

    def __init__(self, marriage=(0.5, 0.25), spells=(1.0 - 2.0**-53,)):
        self.marriage = marriage
        self.spells = list(spells)
        self.spell_calls = 0

    def marriage_uniforms(self, attempt):
        return self.marriage

    def spell_uniform(self, j):
        self.spell_calls += 1
        return self.spells[min(j, len(self.spells) - 1)]


@pytest.fixture
def forced_stream():
    return ForcedStream


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])

import pytest
from hypothesis import HealthCheck, settings

from bayesdebug.corpus import generate_corpus
from bayesdebug.experiment import ExperimentConfig, run_experiment

settings.register_profile("default", max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

CORPUS_SEED = 1
CORPUS_SIZE = 30


@pytest.fixture(scope="session")
def corpus():
    return generate_corpus(CORPUS_SEED, CORPUS_SIZE)


@pytest.fixture(scope="session")
def experiment(corpus):
    return run_experiment(corpus, ExperimentConfig(audit=True))


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line; the test still asserts on its own."""
    lines = request.config.stash[_ACCEPTANCE]

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)

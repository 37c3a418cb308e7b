import pytest

from dmdp.generators import gen_corpus

CORPUS_SEED = 2024
CORPUS_SIZE = 500

# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def corpus():
    return list(gen_corpus(CORPUS_SIZE, CORPUS_SEED))


@pytest.fixture(scope="session")
def small_corpus(corpus):
    return corpus[:60]


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")

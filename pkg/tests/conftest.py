import random

import pytest

from hmmsprt.examples import paper_examples, random_hmm


@pytest.fixture(scope="session")
def ex():
    return paper_examples()


@pytest.fixture
def intro(ex):
    return ex["intro"].hmm


def random_models(count, max_states=4, letters=2, seed=0):
    rng = random.Random(seed)
    return [random_hmm(rng.randint(1, max_states), letters, rng) for _ in range(count)]


# one summary line per acceptance criterion

_criteria: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if not name.startswith("test_criterion_"):
        return
    num = int(name.split("_")[2])
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        doc = name.split("_", 3)[3].split("[")[0].replace("_", " ")
        prev, old = _criteria.get(num, ("passed", doc))
        # several tests for one criterion share the leading words of their names
        words = []
        for x, y in zip(old.split(), doc.split()):
            if x != y:
                break
            words.append(x)
        _criteria[num] = (report.outcome if prev == "passed" else prev, " ".join(words) or doc)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criteria):
        outcome, doc = _criteria[num]
        mark = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {num:2d}: {mark}  {doc}")

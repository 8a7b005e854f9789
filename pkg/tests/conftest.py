import sys

import numpy as np
import pytest

from advprog import summarizer as sm
from advprog.harness import toy_pipeline
from advprog.minilang import CorpusConfig, build_vocabulary, generate_corpus, replacement_pool


@pytest.fixture(scope="session")
def corpus():
    return generate_corpus(CorpusConfig(count=200, seed=3))


@pytest.fixture(scope="session")
def vocab(corpus):
    return build_vocabulary([e.source for e in corpus], replacement_pool())


@pytest.fixture(scope="session")
def small_pipeline():
    return toy_pipeline(count=200, seed=5, test_count=60, train_cfg=sm.TrainConfig(epochs=80))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    verdicts = getattr(mod, "VERDICTS", None)
    if not verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(verdicts):
        ok, detail = verdicts[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")

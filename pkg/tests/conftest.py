import os
import time

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

TRAIN_PAIRS = 50
TRAIN_SEED = 1


@pytest.fixture(scope="session")
def desk_training():
    """Desk-scale model trained once per session on 50 synthetic pairs
    (45 train / 5 validation, 10 epochs)."""
    from fdlpderev.enhancer import EnhancerConfig, train
    from fdlpderev.enhancer.training import examples_from_pairs
    from fdlpderev.synth import synthetic_pairs

    start = time.perf_counter()
    pairs = synthetic_pairs(TRAIN_PAIRS, seed=TRAIN_SEED)
    examples = examples_from_pairs(pairs)
    config = EnhancerConfig.preset("desk", epochs=10, seed=0)
    result = train(examples[:45], examples[45:], config)
    return config, result, examples, time.perf_counter() - start


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

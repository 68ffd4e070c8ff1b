"""Shared fixtures and the --run-slow gate for statistical and brute-force tests."""
import numpy as np
import pytest

from weakimplicit.core.prob import RngStream
from weakimplicit.models.segmentation.corpus import CorpusConfig, synthetic_corpus
from weakimplicit.oracle import ToyDiscreteModel


def pytest_addoption(parser):
    parser.addoption(
        '--run-slow',
        action='store_true',
        default=False,
        help='run the slow oracle and statistical tests',
    )


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: long statistical or enumeration test, enabled by --run-slow')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--run-slow'):
        return
    skip_slow = pytest.mark.skip(reason='needs --run-slow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return RngStream(1234)


@pytest.fixture
def toy_model():
    """|X| = 4, |Y| = 3 full-table model with moderate parameters."""
    return ToyDiscreteModel.random(4, 3, RngStream(7))


@pytest.fixture
def positive_joint():
    joint = RngStream(11).uniform((4, 3)) + 0.1
    return joint / joint.sum()


@pytest.fixture(scope='module')
def small_corpus():
    """Twelve 8x8 synthetic images with three labels."""
    return synthetic_corpus(12, CorpusConfig(image_size=8), RngStream(3))


@pytest.fixture
def tiny_crf_instance():
    """2x2 grid, two labels, random parameters."""
    from weakimplicit.models.segmentation.crf import SegCrfParams

    r = RngStream(21)
    params = SegCrfParams.from_vector(0.8 * r.normal(size=36), 2)
    image = r.uniform((2, 2, 3))
    unary = r.integers(0, 2, size=(2, 2))
    return params, image, np.asarray(unary)

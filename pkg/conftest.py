# SPDX-License-Identifier: MIT

from doctest import ELLIPSIS

import numpy as np
import pytest

from sybil import Sybil
from sybil.parsers import myst, rest

from covop import FrequencyGrid, symbol, track_branches
from covop.product import product_generator

from tests.helpers import example_kernel


markdown_examples = Sybil(
    parsers=[
        myst.DocTestDirectiveParser(optionflags=ELLIPSIS),
        myst.PythonCodeBlockParser(doctest_optionflags=ELLIPSIS),
        myst.SkipParser(),
    ],
    patterns=["*.md"],
)

rest_examples = Sybil(
    parsers=[
        rest.DocTestParser(optionflags=ELLIPSIS),
        rest.PythonCodeBlockParser(),
    ],
    patterns=["*.py"],
    excludes=["__main__.py"],
)

pytest_collect_file = (markdown_examples + rest_examples).pytest()

collect_ignore = []
try:
    import sphinx  # noqa: F401
except ImportError:
    collect_ignore.extend(["docs"])


@pytest.fixture(name="rng")
def _rng():
    return np.random.default_rng(20240611)


@pytest.fixture(name="kernel", scope="session")
def _kernel():
    return example_kernel()


@pytest.fixture(name="product_kernel", scope="session")
def _product_kernel(kernel):
    return product_generator(kernel)


@pytest.fixture(name="grid", scope="session")
def _grid():
    return FrequencyGrid(256)


@pytest.fixture(name="table", scope="session")
def _table(kernel, grid):
    return symbol(kernel, grid)


@pytest.fixture(name="branches", scope="session")
def _branches(table):
    return track_branches(table)


@pytest.fixture(name="product_branches", scope="session")
def _product_branches(product_kernel, grid):
    return track_branches(symbol(product_kernel, grid))

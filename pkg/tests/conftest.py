import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from synth import make_citation_graph  # noqa: E402


@pytest.fixture(scope="session")
def citation_graph():
    return make_citation_graph(n=300, classes=3, feat_dim=120, seed=7)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


def dataset_dir_or_skip(name: str) -> str:
    """Resolve a real converted dataset directory or skip the test.

    Real datasets cannot be downloaded in this environment; point
    SHARPGCL_DATA at a directory containing ``<name>/`` in the neutral
    format (see README) to run the gated reproduction criteria.
    """
    root = os.environ.get("SHARPGCL_DATA", os.path.join(os.path.dirname(__file__), "data"))
    path = os.path.join(root, name)
    if not os.path.isfile(os.path.join(path, "meta.json")):
        pytest.skip(f"real dataset {name!r} not available (set SHARPGCL_DATA); "
                    f"offline environment cannot download it")
    return path

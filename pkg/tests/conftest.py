import numpy as np
import pytest

from ntkdyn.datasets import write_synthetic_idx
from ntkdyn.rng import RngStream


@pytest.fixture(scope="session")
def synthetic_idx(tmp_path_factory):
    """A small synthetic IDX image/label pair shared across tests."""
    root = tmp_path_factory.mktemp("idx")
    images = root / "images.idx"
    labels = root / "labels.idx"
    write_synthetic_idx(str(images), str(labels), 60, RngStream(11, stream_id=9))
    return {"images": str(images), "labels": str(labels), "count": 60}


@pytest.fixture
def circle():
    from ntkdyn.datasets import make_circle_dataset

    return make_circle_dataset()


@pytest.fixture(autouse=True)
def _no_global_numpy_seed():
    # tests must seed their own generators; keep the legacy global state fixed
    # so accidental reliance on it shows up as determinism failures
    state = np.random.get_state()
    yield
    np.random.set_state(state)

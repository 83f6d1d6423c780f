import numpy as np
import pytest

from gwct.codec import AnalyticCodec
from gwct.codec.neural import weight_inventory
from gwct.container import WEIGHTS_MAGIC, write_container
from synth import make_image, two_class_mask


@pytest.fixture(scope="session")
def analytic():
    return AnalyticCodec()


@pytest.fixture(scope="session")
def style_set():
    """Four style images sharing a two-class layout."""
    images = [make_image(seed) for seed in (11, 22, 33, 44)]
    masks = [two_class_mask() for _ in range(4)]
    return images, masks


@pytest.fixture(scope="session")
def random_weight_arrays():
    """A complete, shape-correct random weight set for the neural codec."""
    rng = np.random.default_rng(1234)
    return {
        name: rng.normal(0.0, 0.02, size=shape).astype(np.float32)
        for name, shape in weight_inventory().items()
    }


@pytest.fixture(scope="session")
def weight_file(tmp_path_factory, random_weight_arrays):
    path = tmp_path_factory.mktemp("weights") / "codec.gwctw"
    write_container(path, WEIGHTS_MAGIC, sorted(random_weight_arrays.items()))
    return path

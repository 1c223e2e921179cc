import numpy as np
import pytest

from memnav.scene import SceneGenParams, generate_scene


@pytest.fixture(scope="session")
def small_params():
    return SceneGenParams(
        width_cells=(28, 36),
        height_cells=(28, 36),
        rooms=(2, 3),
        objects=(5, 8),
        categories=("chair", "table", "sofa", "lamp", "plant", "fridge", "sink", "desk"),
    )


@pytest.fixture(scope="session")
def small_scene(small_params):
    return generate_scene(small_params, seed=11)


def random_box(rng, quantum=0.0):
    """Random 3D box; quantum > 0 snaps edges to that grid."""
    center = rng.uniform(0.0, 2.0, size=3)
    size = rng.uniform(0.1, 1.5, size=3)
    if quantum > 0:
        lo = np.round((center - size / 2) / quantum) * quantum
        hi = np.round((center + size / 2) / quantum) * quantum
        hi = np.maximum(hi, lo + quantum)
        center = (lo + hi) / 2
        size = hi - lo
    from memnav.geometry import Box3

    return Box3(tuple(center), tuple(size))

import numpy as np
import pytest

from ribbonflex import generate
from ribbonflex.geometry import SampledSurface


@pytest.fixture(scope="session")
def rev2():
    return generate("REV", ribbons=2)


@pytest.fixture(scope="session")
def rev4():
    return generate("REV", ribbons=4)


@pytest.fixture(scope="session")
def cone2():
    return generate("CONE", ribbons=2)


@pytest.fixture(scope="session")
def dev2():
    return generate("DEV", ribbons=2)


@pytest.fixture(scope="session")
def rand2():
    return generate("RAND", ribbons=2, seed=11)


@pytest.fixture(scope="session")
def rand3():
    return generate("RAND", ribbons=3, seed=11)


def rotation_matrix(axis, angle):
    axis = np.asarray(axis, float)
    axis = axis / np.linalg.norm(axis)
    k = np.array([
        [0, -axis[2], axis[1]],
        [axis[2], 0, -axis[0]],
        [-axis[1], axis[0], 0],
    ])
    return np.eye(3) + np.sin(angle) * k + (1 - np.cos(angle)) * (k @ k)


def transform(surface, rotation=None, translation=None, scale=1.0):
    rot = np.eye(3) if rotation is None else rotation
    shift = np.zeros(3) if translation is None else np.asarray(translation)
    pos = scale * surface.positions() @ rot.T + shift
    return SampledSurface.from_arrays(surface.a, surface.b, pos)

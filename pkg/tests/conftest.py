import numpy as np
import pytest

from bolduc.gpr import Dataset
from bolduc.kernels import KernelConfig
from bolduc.subspace import Box, Subspace, make_coordinate_line, make_random_plane

FAMILIES = ("se", "matern52")


def random_dataset(rng, n, dim, y_scale=1.0) -> Dataset:
    X = rng.uniform(-1.0, 1.0, size=(n, dim))
    y = y_scale * rng.standard_normal(n)
    return Dataset(X, y)


def random_kernel_cfg(rng, family=None) -> KernelConfig:
    family = family or FAMILIES[rng.integers(len(FAMILIES))]
    return KernelConfig(
        family=family,
        signal_std=float(rng.uniform(0.3, 3.0)),
        length_scale=float(rng.uniform(0.1, 2.0)),
    )


def random_subspace(rng, dim, sub_dim, box: Box) -> Subspace:
    anchor = rng.uniform(box.lower * 0.8, box.upper * 0.8)
    axis = int(rng.integers(dim))
    if sub_dim == 1:
        return make_coordinate_line(anchor, axis)
    return make_random_plane(anchor, axis, rng)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)

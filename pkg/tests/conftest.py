"""Shared fixtures: solver warmup and reusable phantom volumes."""

from __future__ import annotations

import numpy as np
import pytest

from sphereseg.evalkit import make_phantom
from sphereseg.graphbuild import FlowNetwork
from sphereseg.maxflow import max_flow

DIMS128 = (128, 128, 128)
CENTER128 = (63.5, 63.5, 63.5)


@pytest.fixture(scope="session", autouse=True)
def warm_solver():
    """Compile (or load from cache) the flow kernels before any timed test."""
    net = FlowNetwork.from_arcs(2, [("s", 0, 2.0), (0, 1, 1.0), (1, "t", 2.0)])
    max_flow(net)


@pytest.fixture(scope="session")
def sphere128():
    """Noise-free sphere phantom, r = 20 mm, 128^3 at 1 mm."""
    return make_phantom("sphere", 20.0, dims=DIMS128)


@pytest.fixture(scope="session")
def ellipsoid128():
    """Noise-free 25 x 20 x 15 mm ellipsoid phantom, 128^3 at 1 mm."""
    return make_phantom("ellipsoid", (25.0, 20.0, 15.0), dims=DIMS128)


@pytest.fixture(scope="session")
def noisy_sphere128():
    """Sphere phantom with Gaussian noise at 10% of the 200-unit contrast."""
    return make_phantom("sphere", 20.0, dims=DIMS128, noise_sigma=20.0,
                        rng_seed=1)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)

import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

from cscat.geometry import (Ball, ConstantContrast, HalfBall, MediumComponent, SceneC,  # noqa: E402
                            SphericalCap, contact_for_cap)

Z = np.array([0.0, 0.0, 1.0])


def composite_scene(contrast=0.1, cap=(0.8, 0.4), detached=True):
    """Half-ball obstacle (flat face up) with a cap resting on its face and an optional detached ball."""
    ob = HalfBall([0.0, 0.0, 0.0], 1.0, Z)
    R, o = cap
    med = SphericalCap([0.0, 0.0, -o], R, Z, o)
    media = [MediumComponent(med, ConstantContrast(contrast), contact=contact_for_cap(ob, med))]
    if detached:
        media.append(MediumComponent(Ball([3.0, 0.0, 0.0], 0.6), ConstantContrast(contrast)))
    return SceneC(ob, media, 1.0)


def soft_sphere(k=1.0):
    return SceneC(Ball([0.0, 0.0, 0.0], 1.0), [], k)


def medium_ball(contrast, radius=1.0, center=(0.0, 0.0, 0.0), k=1.0):
    return SceneC(None, [MediumComponent(Ball(list(center), radius), ConstantContrast(contrast))], k)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)

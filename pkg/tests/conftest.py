import os
import sys

import numpy as np
import pytest

# Same import layout as main.py: modules under src/ are imported by bare name
project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
src_path = os.path.join(project_root, 'src')
sys.path.insert(0, project_root)
sys.path.insert(0, src_path)

import translations  # noqa: E402
from geometry import CurveSample  # noqa: E402


def circle_sample(n=257, radius=1.0, t_max=2.0 * np.pi):
    """Arc-length parametrised circle of the given radius about the origin."""
    t = np.linspace(0.0, t_max, n)
    w = t / radius
    e_r = np.column_stack([np.cos(w), np.sin(w)])
    e_t = np.column_stack([-np.sin(w), np.cos(w)])
    return CurveSample(t, radius * e_r, e_t, -e_r / radius)


def helix_sample(n=401, pitch=0.1, t_max=2.0 * np.pi):
    """(cos t, sin t, pitch t) with its exact derivatives (not unit speed)."""
    t = np.linspace(0.0, t_max, n)
    positions = np.column_stack([np.cos(t), np.sin(t), pitch * t])
    d1 = np.column_stack([-np.sin(t), np.cos(t), np.full_like(t, pitch)])
    d2 = np.column_stack([-np.cos(t), -np.sin(t), np.zeros_like(t)])
    return CurveSample(t, positions, d1, d2)


@pytest.fixture
def unit_circle():
    return circle_sample()


@pytest.fixture
def helix():
    return helix_sample()


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture(autouse=True)
def english_messages():
    translations.set_language("en")
    yield
    translations.set_language("en")

from __future__ import annotations

import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from eigsolve.agent import (
    REUNITARIZE_EVERY,
    AgentUnitary,
    EulerParams,
    RotationAngles,
    accumulate_euler,
    euler_unitary,
    two_level_rotation,
    update_agent,
)
from eigsolve.errors import EqualIndices, IndexOutOfRange
from eigsolve.presets import SY, SZ
from eigsolve.qcore import random_unitary, unitarity_defect

from conftest import phase_aligned_diff

angle = st.floats(min_value=-4 * math.pi, max_value=4 * math.pi, allow_nan=False)
angles = st.builds(RotationAngles, angle, angle, angle)


def test_two_level_rotation_examples():
    np.testing.assert_allclose(two_level_rotation(2, 0, 1, RotationAngles(0, 0, 0)), np.eye(2))
    np.testing.assert_allclose(
        two_level_rotation(2, 0, 1, RotationAngles(math.pi, 0, 0)), [[0, -1], [1, 0]], atol=1e-15
    )
    u = two_level_rotation(4, 1, 3, RotationAngles(math.pi / 2, 0, 0))
    s = 1 / math.sqrt(2)
    expected = np.eye(4, dtype=complex)
    expected[np.ix_([1, 3], [1, 3])] = [[s, -s], [s, s]]
    np.testing.assert_allclose(u, expected, atol=1e-15)


def test_two_level_rotation_errors():
    with pytest.raises(EqualIndices):
        two_level_rotation(4, 2, 2, RotationAngles(1, 1, 1))
    with pytest.raises(IndexOutOfRange):
        two_level_rotation(4, 0, 4, RotationAngles(1, 1, 1))


@settings(max_examples=300, deadline=None)
@given(st.sampled_from([2, 4, 8]), st.data(), angles)
def test_two_level_rotation_unitary_and_local(dim, data, a):
    j = data.draw(st.integers(0, dim - 1))
    m = data.draw(st.integers(0, dim - 1).filter(lambda x: x != j))
    u = two_level_rotation(dim, j, m, a)
    assert unitarity_defect(u) < 1e-12
    for b in range(dim):
        if b not in (j, m):
            e = np.zeros(dim)
            e[b] = 1
            assert np.array_equal(u[:, b], e) and np.array_equal(u[b, :], e)


def test_two_level_rotation_unitary_bulk(rng):
    worst = 0.0
    for _ in range(10_000):
        dim = int(rng.choice([2, 4, 8]))
        j, m = rng.choice(dim, 2, replace=False)
        a = RotationAngles(*rng.uniform(-math.pi, math.pi, 3))
        worst = max(worst, unitarity_defect(two_level_rotation(dim, int(j), int(m), a)))
    assert worst < 1e-12


def _euler_oracle(theta, phi, lam):
    return (
        scipy.linalg.expm(-0.5j * lam * SZ)
        @ scipy.linalg.expm(-0.5j * theta * SY)
        @ scipy.linalg.expm(-0.5j * phi * SZ)
    )


@settings(max_examples=200, deadline=None)
@given(angles)
def test_euler_matches_exponential_oracle(a):
    np.testing.assert_allclose(euler_unitary(EulerParams(*a)), _euler_oracle(*a), atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(angles)
def test_two_level_rotation_equals_euler_up_to_phase(a):
    u = two_level_rotation(2, 0, 1, a)
    assert phase_aligned_diff(u, euler_unitary(EulerParams(*a))) < 1e-12


def test_euler_examples():
    np.testing.assert_allclose(euler_unitary(EulerParams(0, 0, 0)), np.eye(2), atol=1e-15)
    u = euler_unitary(EulerParams(math.pi, 0, 0))
    assert phase_aligned_diff(u, np.array([[0, -1], [1, 0]], dtype=complex)) < 1e-15
    u = euler_unitary(EulerParams(math.pi / 2, math.pi / 2, math.pi / 2))
    assert unitarity_defect(u) < 1e-15
    assert abs(abs(u[0, 0]) - math.cos(math.pi / 4)) < 1e-15
    np.testing.assert_allclose(u, _euler_oracle(math.pi / 2, math.pi / 2, math.pi / 2), atol=1e-14)


def test_accumulate_euler_examples():
    assert accumulate_euler(EulerParams(0, 0, 0), RotationAngles(0.3, -0.2, 0.1), 1) == (
        0.3,
        -0.2,
        0.1,
    )
    assert accumulate_euler(EulerParams(1, 1, 1), RotationAngles(5, 6, 7), 0) == (1, 1, 1)
    pi = math.pi
    assert accumulate_euler(EulerParams(pi, pi, pi), RotationAngles(pi, pi, pi), 1) == (
        2 * pi,
        2 * pi,
        2 * pi,
    )
    with pytest.raises(IndexOutOfRange):
        accumulate_euler(EulerParams(0, 0, 0), RotationAngles(0, 0, 0), 2)


def test_update_agent_examples():
    eye = AgentUnitary.identity(2)
    flip = RotationAngles(math.pi, 0, 0)
    same = update_agent(eye, 0, 0, RotationAngles(1, 2, 3))
    assert np.array_equal(same.matrix, eye.matrix) and same.iteration == 1
    d1 = update_agent(eye, 1, 0, flip)
    np.testing.assert_allclose(d1.matrix, [[0, -1], [1, 0]], atol=1e-15)
    # [[0,-1],[1,0]] squared by hand is -I.
    d2 = update_agent(d1, 1, 0, flip)
    np.testing.assert_allclose(d2.matrix, -np.eye(2), atol=1e-15)
    with pytest.raises(IndexOutOfRange):
        update_agent(eye, 2, 0, flip)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from([2, 4, 8]), st.data(), angles, st.integers(0, 2**32 - 1))
def test_update_agent_is_right_multiplication(dim, data, a, seed):
    j = data.draw(st.integers(0, dim - 1))
    m = data.draw(st.integers(0, dim - 1))
    d = AgentUnitary(random_unitary(dim, np.random.default_rng(seed)))
    out = update_agent(d, m, j, a)
    if m == j:
        assert np.array_equal(out.matrix, d.matrix)
    else:
        np.testing.assert_allclose(
            out.matrix, d.matrix @ two_level_rotation(dim, j, m, a), atol=1e-13
        )
        for b in range(dim):
            if b not in (j, m):
                assert np.array_equal(out.matrix[:, b], d.matrix[:, b])


def test_reunitarization_bounds_drift(rng):
    d = AgentUnitary(random_unitary(4, rng) * (1 + 1e-7))
    assert unitarity_defect(d.matrix) > 1e-9
    for _ in range(REUNITARIZE_EVERY):
        j, m = rng.choice(4, 2, replace=False)
        d = update_agent(d, int(m), int(j), RotationAngles(*rng.uniform(-math.pi, math.pi, 3)))
    assert d.iteration == REUNITARIZE_EVERY
    assert unitarity_defect(d.matrix) < 1e-12


def test_long_trajectory_stays_unitary(rng):
    d = AgentUnitary.identity(8)
    for _ in range(20_000):
        j, m = rng.choice(8, 2, replace=False)
        d = update_agent(d, int(m), int(j), RotationAngles(*rng.uniform(-math.pi, math.pi, 3)))
    assert unitarity_defect(d.matrix) < 1e-9

import functools

import pytest
from hypothesis import HealthCheck, settings

from coarseforge.generators import cayley_ball, free_group, free_times_c2, integers, star_fixture

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@functools.lru_cache(maxsize=None)
def f2_ball(r):
    return cayley_ball(free_group(2, r))


@functools.lru_cache(maxsize=None)
def z_ball(r):
    return cayley_ball(integers(r))


@functools.lru_cache(maxsize=None)
def f2c2_ball(r):
    return cayley_ball(free_times_c2(r))


@pytest.fixture
def star():
    return star_fixture(3, 5)


def strip_cosets(ball, letters="aA"):
    """Left cosets of the cyclic subgroup on ``letters`` in a free-group
    ball: w<a> is keyed by w with its trailing a-letters removed."""
    groups = {}
    for v, w in enumerate(ball.words):
        key = w.rstrip(letters)
        groups.setdefault(key, []).append(v)
    return [groups[k] for k in sorted(groups, key=ball.spec.shortlex_key)]

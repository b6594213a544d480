import numpy as np
import pytest

from sphere_re.geometry import MassTriple, shape_of


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_masses(rng):
    return MassTriple(*rng.uniform(0.2, 5.0, 3))


def random_config(rng, min_sin=1e-3):
    """Three random unit vectors with no near-collision or near-antipodal pair."""
    while True:
        q = rng.normal(size=(3, 3))
        q /= np.linalg.norm(q, axis=1, keepdims=True)
        d = [q[0] @ q[1], q[1] @ q[2], q[2] @ q[0]]
        if all(1.0 - x * x > min_sin**2 for x in d):
            return q


def random_shape(rng):
    return shape_of(random_config(rng, min_sin=0.05))


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[n])

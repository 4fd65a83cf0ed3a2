import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

from dyonem.tensor import FieldState

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False)
vec3 = st.tuples(finite, finite, finite).map(np.array)


@st.composite
def field_states(draw):
    return FieldState(draw(vec3), draw(vec3))


@st.composite
def subluminal_velocities(draw, c=1.0):
    v = draw(st.tuples(*[st.floats(-1, 1, allow_nan=False)] * 3).map(np.array))
    frac = draw(st.floats(0.0, 0.95))
    n = np.linalg.norm(v)
    return np.zeros(3) if n == 0 else v / n * frac * c


def inversion_sign(perm) -> int:
    """Parity by counting inversions; independent of the package implementation."""
    perm = list(perm)
    if len(set(perm)) != len(perm):
        return 0
    inv = sum(1 for a in range(len(perm)) for b in range(a + 1, len(perm)) if perm[a] > perm[b])
    return -1 if inv % 2 else 1


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)

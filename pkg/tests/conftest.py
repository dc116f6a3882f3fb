import random

import pytest

from secad.captioning import synthesize

SQUARE = (
    "sketch face loop line 192 64 line 192 192 line 64 192 line 64 64 "
    "extrude theta 128 phi 128 gamma 128 origin 128 128 128 scale 128 "
    "dist 160 128 op new ext one <eom>"
)

# axis-aligned 0.5-cube: theta/phi/gamma 0 collapse to the identity rotation
CUBE = (
    "sketch face loop line 160 96 line 160 160 line 96 160 line 96 96 "
    "extrude theta 0 phi 0 gamma 0 origin 128 128 128 scale 128 "
    "dist 192 128 op new ext one <eom>"
)

# the cube above with a through-hole cylinder cut (radius 0.125)
CUBE_WITH_CUT = (
    "sketch face loop line 160 96 line 160 160 line 96 160 line 96 96 "
    "extrude theta 0 phi 0 gamma 0 origin 128 128 128 scale 128 "
    "dist 192 128 op new ext one "
    "sketch face loop circle 128 128 16 "
    "extrude theta 0 phi 0 gamma 0 origin 128 128 128 scale 128 "
    "dist 224 160 op cut ext two <eom>"
)

CYLINDER = (
    "sketch face loop circle 128 128 64 "
    "extrude theta 0 phi 0 gamma 0 origin 128 128 128 scale 128 "
    "dist 192 128 op new ext one <eom>"
)


@pytest.fixture(scope="session")
def square_text():
    return SQUARE


@pytest.fixture(scope="session")
def cube_text():
    return CUBE


@pytest.fixture(scope="session")
def cube_with_cut_text():
    return CUBE_WITH_CUT


@pytest.fixture(scope="session")
def cylinder_text():
    return CYLINDER


@pytest.fixture(scope="session")
def small_dataset():
    """A reusable synthesized dataset (session-scoped for speed)."""
    return synthesize(30, seed=20)


@pytest.fixture()
def rng():
    return random.Random(1234)

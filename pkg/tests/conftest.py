import numpy as np
import pytest

from oifem.assembly import DiscreteProblem
from oifem.constitutive import laws_by_name
from oifem.mesh import generate_slab
from oifem.space import BrokenSpace, lift_dirichlet

# asinh(j) + log(1 + j) + j = 3, solved with mpmath at 40 digits
JSTAR_SINH_BV = 1.1978854895468250224


def make_problem(law="sinh-bv", nx=2, ny=2, phi_a=0.0, phi_b=3.0,
                 lengths=(1.0, 1.0), height=1.0):
    mesh = generate_slab(nx, ny, lengths[0], lengths[1], height)
    space = BrokenSpace(mesh)
    return DiscreteProblem(space, laws_by_name(law), lift_dirichlet(space, phi_a, phi_b))


@pytest.fixture
def slab_problem():
    return make_problem


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)

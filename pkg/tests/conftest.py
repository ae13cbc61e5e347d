import numpy as np
import pytest

from conecount.enumeration import primitive_points
from conecount.quadform import EllipsoidForm


@pytest.fixture(scope="session")
def form_n1():
    return EllipsoidForm.standard(1)


@pytest.fixture(scope="session")
def form_n2():
    return EllipsoidForm.standard(2)


@pytest.fixture(scope="session")
def form_n3():
    return EllipsoidForm.standard(3)


@pytest.fixture(scope="session")
def points_n2_small(form_n2):
    """Primitive points of the standard n=2 form up to q = 399."""
    return primitive_points(form_n2, 399)


@pytest.fixture(scope="session")
def points_n2_big(form_n2):
    """Primitive points of the standard n=2 form up to q = 3999 (heavy;
    shared by the large-T acceptance experiments)."""
    return primitive_points(form_n2, 3999)


@pytest.fixture(scope="session")
def points_n3(form_n3):
    """Primitive points of the standard n=3 form up to q = 141 (covers
    ||v|| <= 200)."""
    return primitive_points(form_n3, 141)

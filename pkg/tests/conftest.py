import pytest

from regencomp.checks import preset


@pytest.fixture(scope="session")
def gamma1():
    return preset("gamma1")


@pytest.fixture(scope="session")
def atom_log2():
    return preset("atom_log2")


@pytest.fixture(scope="session")
def uniform_w():
    return preset("uniform_w")


@pytest.fixture(scope="session")
def two_atoms():
    return preset("two_atoms")

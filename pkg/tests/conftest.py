import pytest

import finconv as fc
from finconv import catalog


@pytest.fixture(scope="session")
def c2():
    s = catalog.cyclic_group(2)
    fc.verify_semigroup(s)
    return s


@pytest.fixture(scope="session")
def z8():
    s = catalog.cyclic_group(8)
    fc.verify_semigroup(s)
    return s


@pytest.fixture(scope="session")
def j2():
    s = catalog.chain_semilattice(2)
    fc.verify_semigroup(s)
    return s


@pytest.fixture(scope="session")
def j3():
    s = catalog.chain_semilattice(3)
    fc.verify_semigroup(s)
    return s


@pytest.fixture(scope="session")
def j8():
    s = catalog.chain_semilattice(8)
    fc.verify_semigroup(s)
    return s

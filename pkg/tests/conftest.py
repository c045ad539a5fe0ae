import pytest

import atomkp as ak


@pytest.fixture(scope="session")
def toy():
    return ak.toy_curve()


@pytest.fixture(scope="session")
def toy_lib(toy):
    return ak.build_pattern_library(toy)


@pytest.fixture(scope="session")
def curve_p256():
    return ak.p256()


@pytest.fixture(scope="session")
def lib_p256(curve_p256):
    return ak.build_pattern_library(curve_p256)

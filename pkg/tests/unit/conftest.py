import pytest

from vbias_system.data.dataset import cross_table, load_cad_spect


@pytest.fixture(scope="session")
def spect():
    return load_cad_spect(("X3",))


@pytest.fixture(scope="session")
def spect_table(spect):
    return cross_table(spect)

from __future__ import annotations

import pytest

from soundsym import phonology, semdim


@pytest.fixture(scope="session")
def constructed_inventory():
    return phonology.default_constructed_inventory()


@pytest.fixture(scope="session")
def natural_inventory():
    return phonology.default_natural_inventory()


@pytest.fixture(scope="session")
def norm_rules():
    return phonology.load_normalization_rules()


@pytest.fixture(scope="session")
def rom_rules():
    return phonology.load_romanization_rules()


@pytest.fixture(scope="session")
def registry():
    return semdim.load_dimensions()

import numpy as np
import pytest

from scenario_scuc.case import bundled_case_path, load_case
from scenario_scuc.checks import table_scenarios
from scenario_scuc.scuc import build_sscuc


@pytest.fixture(scope="session")
def case3():
    return load_case(bundled_case_path("case3.json"))


@pytest.fixture(scope="session")
def case6():
    return load_case(bundled_case_path("case6.json"))


@pytest.fixture(scope="session")
def table3(case3):
    return table_scenarios(case3)


@pytest.fixture
def oracle3(case3, table3):
    return build_sscuc(case3, table3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

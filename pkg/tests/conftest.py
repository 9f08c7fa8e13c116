import json
import math
from pathlib import Path

import pytest
from hypothesis import settings

from chiti.comparison import prepare
from chiti.eigensolver import Cap, Interval
from chiti.model_space import ModelParams

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")

DATA = Path(__file__).parent / "data"

QUARTER = math.pi / 4


@pytest.fixture(scope="session")
def oracle():
    return json.loads((DATA / "oracle_values.json").read_text())


def domain_from(case):
    return Cap(case[1]) if case[0] == "cap" else Interval(case[1], case[2])


@pytest.fixture(scope="session")
def run_n2_interval():
    """N = 2 on the interval (pi/4, 3 pi/4)."""
    return prepare(ModelParams.canonical(2.0), Interval(QUARTER, 3 * QUARTER))


@pytest.fixture(scope="session")
def run_n3_interval():
    return prepare(ModelParams.canonical(3.0), Interval(0.5, 2.6))


@pytest.fixture(scope="session")
def run_n2_cap():
    return prepare(ModelParams.canonical(2.0), Cap(0.3))

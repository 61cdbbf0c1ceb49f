import pytest

from gtprob import Dataset, FamilySpec
from gtprob.constants import SURVEY_CELLS, SURVEY_COUNTS


@pytest.fixture
def bern():
    return FamilySpec.bernoulli()


@pytest.fixture
def binom70():
    return Dataset.binomial(100, 70)


@pytest.fixture
def survey():
    return FamilySpec.cells(SURVEY_CELLS), Dataset.from_cell_counts(SURVEY_COUNTS)

import pytest

from adlrec.taxonomy import default_category_table


@pytest.fixture(scope="session")
def table():
    return default_category_table()

import pytest

from lyapbound import make_context


@pytest.fixture
def ctx40():
    return make_context(40)


@pytest.fixture
def ctx60():
    return make_context(60)

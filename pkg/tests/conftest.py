import pytest


@pytest.fixture
def rng():
    from avseq.model import make_rng
    return make_rng(12345)

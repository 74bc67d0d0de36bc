import pytest

from inche import SchemeParams, keygen


@pytest.fixture(scope="session")
def key_cache():
    """Session-wide key factory; keygen is cheap but not free at 2048 bits."""
    cache = {}

    def get(scheme="paillier", n_bits=16, modulus_bits=256, seed=777):
        spec = (scheme, n_bits, modulus_bits, seed)
        if spec not in cache:
            params = SchemeParams(n_bits=n_bits, modulus_bits=modulus_bits,
                                  seed=seed)
            cache[spec] = keygen(params, scheme=scheme)
        return cache[spec]

    return get


@pytest.fixture(params=["debug", "paillier"])
def scheme(request):
    return request.param


@pytest.fixture
def key16(scheme, key_cache):
    """16-bit-domain key on either backend."""
    return key_cache(scheme=scheme, n_bits=16, modulus_bits=256)


@pytest.fixture
def paillier16(key_cache):
    return key_cache(scheme="paillier", n_bits=16, modulus_bits=256)


@pytest.fixture
def debug16(key_cache):
    return key_cache(scheme="debug", n_bits=16, modulus_bits=256)

import numpy as np
import pytest

from framepot.circuit import EnsembleSpec, Entangler, Family, build_instance

ALL_FAMILIES = [
    (Family.PARALLEL, None),
    (Family.LOCAL, None),
    (Family.HEA, Entangler.CNOT),
    (Family.HEA, Entangler.CZ),
]


def random_spec(rng, family, entangler, n_max=6, l_max=6):
    n = int(rng.integers(2, n_max + 1))
    l = int(rng.integers(1, l_max + 1))
    return EnsembleSpec(family, n=n, l=l, entangler=entangler)


def random_circuit(rng, family, entangler, n_max=6, l_max=6):
    return build_instance(random_spec(rng, family, entangler, n_max, l_max), rng)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)

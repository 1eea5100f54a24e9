"""Random inputs shared by the test modules."""
import random
from functools import lru_cache

from sparkforge.cech_models import MODEL_FIXTURES, TRIPLE_FIXTURES
from sparkforge.exact_linalg import QQi, mpq, vadd


@lru_cache(maxsize=None)
def model(name):
    return MODEL_FIXTURES[name]()


@lru_cache(maxsize=None)
def triple(name, p=None):
    if name in TRIPLE_FIXTURES:
        return TRIPLE_FIXTURES[name]()
    return model(name).triple(p)


def random_spark(T, k, rng: random.Random, frac=0.3):
    """Integral combination of the lattice generators plus a sprinkling of divisible ones."""
    S = T.spark_set(k)
    v = {}
    for g in S.lat:
        v = vadd(v, g, rng.randint(-2, 2))
    for g in S.div:
        if rng.random() < frac:
            v = vadd(v, g, mpq(rng.randint(-2, 2), rng.randint(1, 3)))
    return v


def random_boundary(T, k, rng: random.Random):
    G = T.G
    z = set(G.integral_coords(k - 1))
    x = {}
    for i in range(G.rank(k - 1)):
        if rng.random() < 0.2:
            c = mpq(rng.randint(-2, 2)) if i in z else mpq(rng.randint(-2, 2), rng.randint(1, 3))
            if c:
                x[i] = c
    return G.d(k - 1).apply(x)


def random_cochain(M, k, rng: random.Random, density=0.1):
    lay, _ = M.layout(None)
    c = {}
    for key in lay.get(k, []):
        if rng.random() < density:
            x = QQi(rng.randint(-2, 2), rng.randint(-2, 2))
            if x:
                c[key] = x
    return c

"""Random disorder models for the inequality sweeps."""

import numpy as np

from glasschain.disorder import DisorderModel, bernoulli, shifted_symmetric, two_point


def system_i(rng, n):
    laws = []
    for _ in range(n):
        r = rng.uniform()
        if r < 0.6:
            laws.append(bernoulli(rng.uniform(0.05, 3), rng.uniform(0.5, 1)))
        elif r < 0.9:
            laws.append(two_point(rng.uniform(0, 3), rng.uniform(0.05, 3), rng.uniform()))
        else:
            laws.append(two_point(0.0, rng.uniform(0.05, 3), rng.uniform()))
    return DisorderModel(laws)


def system_ii(rng, n):
    laws = []
    for _ in range(n):
        mu = rng.uniform(0.05, 2)
        r = rng.uniform()
        if r < 0.6:
            laws.append(shifted_symmetric(mu, mu + rng.uniform(0.05, 2)))  # wide
        elif r < 0.9:
            laws.append(shifted_symmetric(mu, rng.uniform(0, mu)))  # only positive values
        else:
            laws.append(shifted_symmetric(mu, mu))  # one value is exactly 0
    return DisorderModel(laws)


def system_iii(rng, n):
    ps = rng.uniform(0, 1, n)
    if np.prod(2 * ps - 1) < 0:
        ps[0] = 1 - ps[0]
    return DisorderModel([bernoulli(rng.uniform(0.05, 3), p) for p in ps])


def symmetric_all(rng, n):
    laws = []
    for _ in range(n):
        r = rng.uniform()
        if r < 0.5:
            laws.append(bernoulli(rng.uniform(0.05, 3), 0.5))
        elif r < 0.92:
            laws.append(shifted_symmetric(0.0, rng.uniform(0.05, 3)))
        else:
            laws.append(shifted_symmetric(0.0, 0.0))
    return DisorderModel(laws)


def symmetric_one(rng, n):
    """alpha = 0 through a single symmetric bond; the others are arbitrary +-J laws."""
    laws = [bernoulli(rng.uniform(0.05, 3), rng.uniform()) for _ in range(n)]
    laws[int(rng.integers(n))] = bernoulli(rng.uniform(0.05, 3), 0.5)
    return DisorderModel(laws)


def all_nonzero(m):
    return all(law.nonzero_support() for law in m.laws)

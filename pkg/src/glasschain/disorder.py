"""Quenched disorder: per-bond coupling laws, exact enumeration, sampling and gauge reductions."""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np
from scipy import integrate, special

from glasschain.chain import (
    CouplingVector,
    batch_bond_correlation,
    batch_truncated_correlation,
    bond_correlation,
    check_bond,
    check_pair,
    truncated_correlation,
)

N_MAX_DISORDER = 20
ROW_CHUNK = 1 << 16
SAMPLE_BLOCK = 4096
DENSITY_TOL = 1e-6


class LawKind(str, enum.Enum):
    bernoulli = "bernoulli"
    shifted_symmetric = "shifted_symmetric"
    two_point = "two_point"
    continuous = "continuous"


class ContinuousLaw:
    """A density on [lo, hi] with an inverse CDF for sampling."""

    name = "continuous"
    lo = -math.inf
    hi = math.inf
    center: float | None = None  # set when the density is symmetric about it

    def density(self, x: float) -> float:
        raise NotImplementedError

    def ppf(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def params(self) -> tuple[tuple[str, float], ...]:
        return ()

    def __eq__(self, other):
        return type(self) is type(other) and self.params == other.params and bool(self.params)

    def __hash__(self):
        return hash((self.name, self.params))

    def __repr__(self):
        return f"{self.name}({', '.join(f'{k}={v!r}' for k, v in self.params)})"

    def validate(self):
        mass, _ = integrate.quad(self.density, self.lo, self.hi, limit=200)
        if abs(mass - 1.0) > DENSITY_TOL:
            raise ValueError(f"{self.name} density integrates to {mass!r}, not 1")

    def mean(self) -> float:
        if self.center is not None:
            return self.center
        m, _ = integrate.quad(lambda x: x * self.density(x), self.lo, self.hi, limit=200)
        return m

    def positively_biased(self, n_grid: int = 2001) -> bool:
        """density(x) >= density(-x) for every x > 0, checked on a grid."""
        top = max(abs(self.lo), abs(self.hi))
        if not math.isfinite(top):
            top = 50.0
        xs = np.linspace(0.0, top, n_grid)[1:]

        def dens(v):
            return np.array([self.density(x) if self.lo <= x <= self.hi else 0.0 for x in v])

        plus, minus = dens(xs), dens(-xs)
        return bool(np.all(plus >= minus - 1e-12 * np.maximum(plus, minus)))


class Gaussian(ContinuousLaw):
    name = "gaussian"

    def __init__(self, mu: float, s: float):
        if not s > 0 or not math.isfinite(mu):
            raise ValueError(f"gaussian needs finite mu and s > 0, got mu={mu!r}, s={s!r}")
        self.mu, self.s, self.center = float(mu), float(s), float(mu)
        self._norm = 1.0 / (self.s * math.sqrt(2.0 * math.pi))

    @property
    def params(self):
        return (("mu", self.mu), ("s", self.s))

    def density(self, x):
        return self._norm * math.exp(-0.5 * ((x - self.mu) / self.s) ** 2)

    def ppf(self, u):
        return self.mu + self.s * special.ndtri(u)


class Uniform(ContinuousLaw):
    name = "uniform"

    def __init__(self, a: float, b: float):
        if not b > a or not math.isfinite(b - a):
            raise ValueError(f"uniform needs finite a < b, got a={a!r}, b={b!r}")
        self.lo, self.hi = float(a), float(b)
        self.center = 0.5 * (self.lo + self.hi)

    @property
    def params(self):
        return (("a", self.lo), ("b", self.hi))

    def density(self, x):
        return 1.0 / (self.hi - self.lo) if self.lo <= x <= self.hi else 0.0

    def ppf(self, u):
        return self.lo + (self.hi - self.lo) * np.asarray(u)


class Tabulated(ContinuousLaw):
    """Arbitrary density on [lo, hi], sampled by inverting a tabulated CDF.

    Picklable (for worker processes) only if ``density`` is a module-level function.
    """

    name = "tabulated"

    def __init__(self, density: Callable[[float], float], lo: float, hi: float, n_grid: int = 8193):
        if not hi > lo or not math.isfinite(hi - lo):
            raise ValueError("tabulated density needs a finite support lo < hi")
        self._density, self.lo, self.hi = density, float(lo), float(hi)
        xs = np.linspace(lo, hi, n_grid)
        ys = np.array([density(x) for x in xs])
        if np.any(ys < 0):
            raise ValueError("density must be non-negative")
        cdf = integrate.cumulative_trapezoid(ys, xs, initial=0.0)
        self._xs, self._cdf = xs, cdf / cdf[-1]
        mirrored = np.array([density(lo + hi - x) for x in xs])
        if np.allclose(ys, mirrored, rtol=1e-9, atol=1e-12):
            self.center = 0.5 * (self.lo + self.hi)

    def density(self, x):
        return self._density(x)

    def ppf(self, u):
        return np.interp(u, self._cdf, self._xs)


@dataclass(frozen=True)
class BondLaw:
    """Law of one coupling J_i.

    Discrete kinds are two-point laws with ``values`` and ``probs``:
    bernoulli is +-J with (p, q); shifted_symmetric is mu +- J with 1/2 each;
    two_point is any two values. Continuous laws carry a ContinuousLaw.
    """

    kind: LawKind
    values: tuple[float, ...] = ()
    probs: tuple[float, ...] = ()
    magnitude: float | None = None  # J^(i)
    mu: float | None = None
    cont: ContinuousLaw | None = None

    @property
    def is_discrete(self) -> bool:
        return self.kind is not LawKind.continuous

    @property
    def p(self) -> float:
        return self.probs[0]

    @property
    def q(self) -> float:
        return self.probs[1]

    @property
    def wide(self) -> bool:
        """shifted_symmetric with J^(i) > mu_i: the lower value is negative."""
        return self.kind is LawKind.shifted_symmetric and self.magnitude > self.mu

    def mean(self) -> float:
        if self.cont is not None:
            return self.cont.mean()
        return math.fsum(v * p for v, p in zip(self.values, self.probs))

    def symmetric_center(self) -> float | None:
        """Point the law is symmetric about, or None."""
        if self.cont is not None:
            return self.cont.center
        (a, b), (pa, pb) = self.values, self.probs
        if a == b:
            return a
        if pa == pb:
            return 0.5 * (a + b)
        return None

    def positively_biased(self) -> bool:
        """p(|J|) >= p(-|J|) for every magnitude."""
        if self.cont is not None:
            return self.cont.positively_biased()
        mass: dict[float, float] = {}
        for v, p in zip(self.values, self.probs):
            mass[v] = mass.get(v, 0.0) + p
        return all(mass.get(abs(v), 0.0) >= mass[v] for v in mass if v < 0)

    def nonzero_support(self) -> bool:
        return self.is_discrete and all(v != 0.0 for v, p in zip(self.values, self.probs) if p > 0)

    def ppf(self, u: np.ndarray) -> np.ndarray:
        """Inverse CDF; maps u and 1-u to mirror values for symmetric laws."""
        if self.cont is not None:
            return self.cont.ppf(u)
        order = np.argsort(self.values, kind="stable")
        vals = np.asarray(self.values)[order]
        cum = np.cumsum(np.asarray(self.probs)[order])
        idx = np.searchsorted(cum[:-1], u, side="right")
        return vals[idx]

    def config(self) -> dict[str, object]:
        """Key-value description used by the model file format."""
        if self.kind is LawKind.bernoulli:
            return {"kind": "bernoulli", "J": self.magnitude, "p": self.p}
        if self.kind is LawKind.shifted_symmetric:
            return {"kind": "shifted_symmetric", "mu": self.mu, "J": self.magnitude}
        if self.kind is LawKind.two_point:
            return {"kind": "two_point", "a": self.values[0], "b": self.values[1], "p": self.p}
        if self.cont.name == "tabulated":
            raise ValueError("tabulated densities have no key-value form")
        return {"kind": self.cont.name, **dict(self.cont.params)}


def _check_prob(p: float, name: str = "p"):
    if not (0.0 <= p <= 1.0) or math.isnan(p):
        raise ValueError(f"{name} must lie in [0, 1], got {p!r}")


def bernoulli(magnitude: float, p: float) -> BondLaw:
    """+J with probability p, -J with probability 1 - p."""
    if not magnitude > 0 or not math.isfinite(magnitude):
        raise ValueError(f"bernoulli magnitude must be positive and finite, got {magnitude!r}")
    _check_prob(p)
    return BondLaw(LawKind.bernoulli, (float(magnitude), -float(magnitude)),
                   (float(p), 1.0 - float(p)), magnitude=float(magnitude))


def shifted_symmetric(mu: float, half_width: float) -> BondLaw:
    """mu + J and mu - J with probability 1/2 each (mu = 0 is the symmetric law)."""
    if not mu >= 0 or not half_width >= 0 or not math.isfinite(mu + half_width):
        raise ValueError(f"need mu >= 0 and J >= 0, got mu={mu!r}, J={half_width!r}")
    mu, half_width = float(mu), float(half_width)
    return BondLaw(LawKind.shifted_symmetric, (mu + half_width, mu - half_width), (0.5, 0.5),
                   magnitude=half_width, mu=mu)


def two_point(a: float, b: float, p: float) -> BondLaw:
    """a with probability p, b with probability 1 - p."""
    _check_prob(p)
    if not math.isfinite(a) or not math.isfinite(b):
        raise ValueError("two_point values must be finite")
    return BondLaw(LawKind.two_point, (float(a), float(b)), (float(p), 1.0 - float(p)))


def zero_mean_two_point(a: float, b: float) -> BondLaw:
    """+a and -b with the unique probabilities giving mean zero: p a = q b."""
    if not a > 0 or not b > 0:
        raise ValueError(f"need a, b > 0, got {a!r}, {b!r}")
    p, q = b / (a + b), a / (a + b)
    if abs(p * a - q * b) > 1e-14:
        raise ValueError(f"zero-mean identity fails: p a - q b = {p * a - q * b!r}")
    return BondLaw(LawKind.two_point, (float(a), -float(b)), (p, q))


def _continuous(law: ContinuousLaw) -> BondLaw:
    law.validate()
    return BondLaw(LawKind.continuous, cont=law)


def gaussian(mu: float, s: float) -> BondLaw:
    return _continuous(Gaussian(mu, s))


def uniform(a: float, b: float) -> BondLaw:
    return _continuous(Uniform(a, b))


def tabulated(density: Callable[[float], float], lo: float, hi: float,
              n_grid: int = 8193) -> BondLaw:
    """Arbitrary density on [lo, hi]; its integral must be 1 within 1e-6."""
    return _continuous(Tabulated(density, lo, hi, n_grid))


@dataclass(frozen=True)
class DisorderModel:
    laws: tuple[BondLaw, ...]

    def __post_init__(self):
        object.__setattr__(self, "laws", tuple(self.laws))
        if len(self.laws) < 2:
            raise ValueError("a disorder model needs at least 2 bonds")

    @property
    def n(self) -> int:
        return len(self.laws)

    @property
    def is_discrete(self) -> bool:
        return all(law.is_discrete for law in self.laws)

    def kinds(self) -> set[LawKind]:
        return {law.kind for law in self.laws}

    def all_kind(self, kind: LawKind) -> bool:
        return all(law.kind is kind for law in self.laws)

    def law(self, h: int) -> BondLaw:
        return self.laws[check_bond(h, self.n) - 1]


def alpha_parameter(m: DisorderModel) -> float:
    """prod_i (p_i - q_i) of an all-bernoulli model."""
    if not m.all_kind(LawKind.bernoulli):
        raise ValueError("alpha is defined only for all-bernoulli models")
    return math.prod(law.p - law.q for law in m.laws)


def gray_rows(m: DisorderModel, start: int, stop: int) -> tuple[np.ndarray, np.ndarray]:
    """Realizations start..stop-1 in Gray-code order and their probabilities."""
    idx = np.arange(start, stop, dtype=np.int64)
    gray = idx ^ (idx >> 1)
    bits = (gray[:, None] >> np.arange(m.n, dtype=np.int64)) & 1
    values = np.array([law.values for law in m.laws])  # (N, 2)
    probs = np.array([law.probs for law in m.laws])
    cols = np.arange(m.n)
    return values[cols, bits], np.prod(probs[cols, bits], axis=1)


def _check_enumerable(m: DisorderModel):
    if not m.is_discrete:
        raise ValueError("exact enumeration needs discrete laws; use monte_carlo_average")
    if m.n > N_MAX_DISORDER:
        raise ValueError(f"N = {m.n} exceeds the enumeration limit {N_MAX_DISORDER}")


def enumerate_realizations(m: DisorderModel) -> Iterator[tuple[CouplingVector, float]]:
    """All 2^N realizations (Gray-code order) with their probabilities."""
    _check_enumerable(m)
    total = 1 << m.n
    for start in range(0, total, ROW_CHUNK):
        rows, probs = gray_rows(m, start, min(start + ROW_CHUNK, total))
        for row, p in zip(rows, probs):
            yield CouplingVector(tuple(row)), float(p)


class BondEnergy:
    """J_h omega_h."""

    def __init__(self, h: int):
        self.h = h

    def __call__(self, c: CouplingVector) -> float:
        return c[self.h] * bond_correlation(c, self.h)

    def batch(self, rows: np.ndarray) -> np.ndarray:
        return rows[:, self.h - 1] * batch_bond_correlation(rows, self.h)

    def __repr__(self):
        return f"BondEnergy({self.h})"


class TruncatedEnergy:
    """J_h J_k (omega_hk - omega_h omega_k)."""

    def __init__(self, h: int, k: int):
        if h == k:
            raise ValueError(f"bond pair needs h != k, got h = k = {h}")
        self.h, self.k = h, k

    def __call__(self, c: CouplingVector) -> float:
        return c[self.h] * c[self.k] * truncated_correlation(c, self.h, self.k)

    def batch(self, rows: np.ndarray) -> np.ndarray:
        return (rows[:, self.h - 1] * rows[:, self.k - 1]
                * batch_truncated_correlation(rows, self.h, self.k))

    def __repr__(self):
        return f"TruncatedEnergy({self.h}, {self.k})"


class Constant:
    def __init__(self, value: float):
        self.value = float(value)

    def __call__(self, c: CouplingVector) -> float:
        return self.value

    def batch(self, rows: np.ndarray) -> np.ndarray:
        return np.full(len(rows), self.value)


def evaluate_rows(f, rows: np.ndarray) -> np.ndarray:
    if hasattr(f, "batch"):
        return np.asarray(f.batch(rows), dtype=np.float64)
    return np.array([f(CouplingVector(tuple(r))) for r in rows], dtype=np.float64)


def _chunk_terms(args):
    m, f, start, stop = args
    rows, probs = gray_rows(m, start, stop)
    return probs * evaluate_rows(f, rows)


def quenched_terms(m: DisorderModel, f, workers: int = 1) -> np.ndarray:
    """prob * f(realization) for every realization, in Gray-code order."""
    _check_enumerable(m)
    total = 1 << m.n
    tasks = [(m, f, s, min(s + ROW_CHUNK, total)) for s in range(0, total, ROW_CHUNK)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chunk_terms, tasks))
    else:
        parts = [_chunk_terms(t) for t in tasks]
    return np.concatenate(parts)


def quenched_average(m: DisorderModel, f, *, workers: int = 1,
                     n_samples: int | None = None, seed: int | None = None) -> float:
    """Average of f over the disorder.

    Discrete models are summed exactly (math.fsum, so the result does not depend on
    chunking). Continuous models go through monte_carlo_average and need
    ``n_samples`` and ``seed``; only the mean is returned.
    """
    if m.is_discrete:
        return math.fsum(quenched_terms(m, f, workers))
    if n_samples is None or seed is None:
        raise ValueError("continuous models need n_samples and seed")
    return monte_carlo_average(m, f, n_samples, seed, workers=workers)[0]


def _block_generator(seed: int, block: int) -> np.random.Generator:
    # Philox is counter-based: one key per block gives streams that do not
    # depend on how blocks are spread over workers
    return np.random.Generator(np.random.Philox(key=(int(seed) % (1 << 64)) + (block << 64)))


def _sample_block(args):
    m, f, seed, block, size, flip = args
    u = _block_generator(seed, block).random((size, m.n))
    mirror = u.copy()
    mirror[:, flip] = 1.0 - mirror[:, flip]
    rows = np.column_stack([law.ppf(u[:, i]) for i, law in enumerate(m.laws)])
    twins = np.column_stack([law.ppf(mirror[:, i]) for i, law in enumerate(m.laws)])
    return 0.5 * (evaluate_rows(f, rows) + evaluate_rows(f, twins))


def monte_carlo_average(m: DisorderModel, f, n_samples: int, seed: int, *,
                        antithetic_bond: int = 1, workers: int = 1) -> tuple[float, float]:
    """Sample mean and standard error of f under m.

    Each of the ``n_samples`` draws is evaluated twice, the second time with the
    uniform variate of ``antithetic_bond`` reflected (u -> 1-u). For a law
    symmetric about zero that is exactly J_h -> -J_h. The pair average is one
    sample. Any law, discrete or continuous, can be sampled.
    """
    if not isinstance(n_samples, (int, np.integer)) or n_samples < 100:
        raise ValueError(f"n_samples must be an integer >= 100, got {n_samples!r}")
    if seed is None:
        raise ValueError("an explicit seed is required")
    flip = check_bond(antithetic_bond, m.n) - 1
    tasks = []
    for block, start in enumerate(range(0, n_samples, SAMPLE_BLOCK)):
        tasks.append((m, f, seed, block, min(SAMPLE_BLOCK, n_samples - start), flip))
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_sample_block, tasks))
    else:
        parts = [_sample_block(t) for t in tasks]
    x = np.concatenate(parts)
    if np.all(x == x[0]):
        return float(x[0]), 0.0
    mean = math.fsum(x) / len(x)
    var = math.fsum((x - mean) ** 2) / (len(x) - 1)
    return mean, math.sqrt(var / len(x))


@dataclass(frozen=True)
class GaugeReducedModel:
    """Disorder after gauging every bond but one to positive values.

    ``bond_values[i]`` lists the equally likely positive values of bond i+1; the
    entry of ``flip_bond`` is its magnitude, which carries sign + with
    probability P = (1 + alpha)/2 and - with Q = (1 - alpha)/2.
    """

    bond_values: tuple[tuple[float, ...], ...]
    flip_bond: int
    alpha: float

    @property
    def P(self) -> float:
        return 0.5 * (1.0 + self.alpha)

    @property
    def Q(self) -> float:
        return 0.5 * (1.0 - self.alpha)

    @property
    def flip_magnitude(self) -> float:
        return self.bond_values[self.flip_bond - 1][0]

    @property
    def n(self) -> int:
        return len(self.bond_values)

    def realizations(self) -> Iterator[tuple[CouplingVector, float]]:
        others = [i for i in range(self.n) if i != self.flip_bond - 1]
        sizes = [len(self.bond_values[i]) for i in others]
        weight = 1.0 / math.prod(sizes)
        for combo in np.ndindex(*sizes):
            j = [0.0] * self.n
            for i, c in zip(others, combo):
                j[i] = self.bond_values[i][c]
            for sign, prob in ((1.0, self.P), (-1.0, self.Q)):
                j[self.flip_bond - 1] = sign * self.flip_magnitude
                yield CouplingVector(tuple(j)), prob * weight

    def average(self, f) -> float:
        """Average of a gauge-invariant observable."""
        return math.fsum(p * f(c) for c, p in self.realizations())


def gauge_reduce_iii(m: DisorderModel) -> GaugeReducedModel:
    """Bernoulli model -> bonds 1..N-1 at +J^(i), bond N at +-J^(N) with (P, Q).

    tau_j = a_j sigma_j with a_j = prod_{i<j} sgn J_i leaves bond N with sign
    prod_i sgn J_i, whose mean is prod_i (p_i - q_i).
    """
    alpha = alpha_parameter(m)
    return GaugeReducedModel(tuple((law.magnitude,) for law in m.laws), m.n, alpha)


def gauge_reduce_ii(m: DisorderModel, h: int) -> GaugeReducedModel:
    """Shifted-symmetric model with mu_h = 0 -> bond h at +-a_h, others positive two-point.

    Bonds with J^(i) <= mu_i already take non-negative values and keep them.
    """
    if not m.all_kind(LawKind.shifted_symmetric):
        raise ValueError("gauge_reduce_ii needs shifted_symmetric laws on every bond")
    law_h = m.law(h)
    if law_h.mu != 0.0:
        raise ValueError(f"bond {h} has mu = {law_h.mu!r}; the reduction needs mu_h = 0")
    values = []
    for i, law in enumerate(m.laws):
        if i == h - 1:
            values.append((law.magnitude,))
        else:
            values.append((law.mu + law.magnitude, abs(law.mu - law.magnitude)))
    return GaugeReducedModel(tuple(values), h, 0.0)


def uniform_alpha_model(magnitudes: Sequence[float], alpha: float) -> DisorderModel:
    """Bernoulli model with the given magnitudes and p_i - q_i = alpha^(1/N) on every bond."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha!r}")
    n = len(magnitudes)
    bias = alpha ** (1.0 / n)
    return DisorderModel(tuple(bernoulli(j, 0.5 * (1.0 + bias)) for j in magnitudes))


_LAW_KEYS = {
    "bernoulli": ("J", "p"),
    "shifted_symmetric": ("mu", "J"),
    "two_point": ("a", "b", "p"),
    "gaussian": ("mu", "s"),
    "uniform": ("a", "b"),
}


def law_from_config(cfg: dict) -> BondLaw:
    """Inverse of BondLaw.config(); unknown or missing keys raise KeyError naming them."""
    cfg = dict(cfg)
    kind = cfg.pop("kind", None)
    if kind not in _LAW_KEYS:
        raise KeyError(f"kind: expected one of {sorted(_LAW_KEYS)}, got {kind!r}")
    need = _LAW_KEYS[kind]
    extra = sorted(set(cfg) - set(need))
    if extra:
        raise KeyError(f"{extra[0]}: not a parameter of kind {kind}")
    missing = [key for key in need if key not in cfg]
    if missing:
        raise KeyError(f"{missing[0]}: required for kind {kind}")
    x = {key: float(cfg[key]) for key in need}
    if kind == "bernoulli":
        return bernoulli(x["J"], x["p"])
    if kind == "shifted_symmetric":
        return shifted_symmetric(x["mu"], x["J"])
    if kind == "two_point":
        return two_point(x["a"], x["b"], x["p"])
    if kind == "gaussian":
        return gaussian(x["mu"], x["s"])
    return uniform(x["a"], x["b"])

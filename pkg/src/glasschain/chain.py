"""Exact observables of the periodic nearest-neighbour chain for one coupling realization.

Couplings are dimensionless (inverse temperature absorbed). With t_i = tanh J_i the
closed forms reduce to

    Z / 2^N         = prod cosh J_i * (1 + prod t_i)
    omega_h         = (t_h + prod_{i!=h} t_i) / (1 + prod t_i)
    omega_hk        = (t_h t_k + prod_{i!=h,k} t_i) / (1 + prod t_i)
    omega_hk - omega_h omega_k
                    = prod_{i!=h,k} t_i * sech^2 J_h sech^2 J_k / (1 + prod t_i)^2

which are the cosh/sinh expressions divided through by prod cosh J_i. All products
are accumulated as LogSigned so N*|J| can be arbitrarily large.

Bond h joins sites h and h+1 (1-based), bond N joins N and 1.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from glasschain import enumeration
from glasschain.logsigned import (
    LOG_ZERO,
    LogSigned,
    log_abs_tanh,
    log_cosh,
    sign_of,
)

N_MAX_BRUTE_FORCE = 22
N_MAX_EXACT_ARITHMETIC = 12


class Method(str, enum.Enum):
    closed_form = "closed_form"
    brute_force = "brute_force"


@dataclass(frozen=True)
class CouplingVector:
    couplings: tuple[float, ...]

    def __post_init__(self):
        values = tuple(float(x) for x in self.couplings)
        object.__setattr__(self, "couplings", values)
        if len(values) < 2:
            raise ValueError(f"a periodic chain needs N >= 2 bonds, got {len(values)}")
        if not all(math.isfinite(x) for x in values):
            raise ValueError("couplings must be finite")

    @property
    def n(self) -> int:
        return len(self.couplings)

    def __len__(self):
        return len(self.couplings)

    def __getitem__(self, h: int) -> float:
        """1-based bond access."""
        return self.couplings[check_bond(h, self.n) - 1]

    def flipped(self, h: int) -> CouplingVector:
        j = list(self.couplings)
        j[check_bond(h, self.n) - 1] *= -1.0
        return CouplingVector(tuple(j))

    @cached_property
    def _terms(self) -> _ChainTerms:
        return _ChainTerms(self.couplings)


def check_bond(h: int, n: int) -> int:
    if isinstance(h, bool) or not isinstance(h, (int, np.integer)):
        raise TypeError(f"bond index must be an integer, got {h!r}")
    if not 1 <= h <= n:
        raise IndexError(f"bond index {h} out of range 1..{n}")
    return int(h)


def check_pair(h: int, k: int, n: int) -> tuple[int, int]:
    check_bond(h, n)
    check_bond(k, n)
    if h == k:
        raise ValueError(f"bond pair needs h != k, got h = k = {h}")
    return int(h), int(k)


class _ChainTerms:
    """Per-realization tanh logs with O(1) products that leave out one or two bonds."""

    def __init__(self, couplings: Sequence[float]):
        self.j = couplings
        self.log_t = [log_abs_tanh(x) for x in couplings]
        self.sign_t = [sign_of(x) for x in couplings]
        self.log_c = [log_cosh(x) for x in couplings]
        self.zeros = [i for i, s in enumerate(self.sign_t) if s == 0]
        nonzero = [i for i, s in enumerate(self.sign_t) if s != 0]
        self.log_total = math.fsum(self.log_t[i] for i in nonzero)
        self.sign_total = 1
        for i in nonzero:
            self.sign_total *= self.sign_t[i]
        self.one_plus_r = LogSigned.one() + self.tanh_product(())

    def tanh(self, i: int) -> LogSigned:
        return LogSigned.from_parts(self.sign_t[i], self.log_t[i])

    def tanh_product(self, skip: Iterable[int]) -> LogSigned:
        """prod_{i not in skip} tanh J_i (0-based indices)."""
        skip = set(skip)
        if any(z not in skip for z in self.zeros):
            return LogSigned.zero()
        sign = self.sign_total
        logs = [self.log_total]
        for i in skip:
            if self.sign_t[i] != 0:
                sign *= self.sign_t[i]
                logs.append(-self.log_t[i])
        return LogSigned.from_parts(sign, math.fsum(logs))

    def log_partition(self) -> float:
        return math.fsum(self.log_c) + self.one_plus_r.log_mag

    def omega(self, h: int) -> float:
        num = self.tanh(h) + self.tanh_product((h,))
        return float(num / self.one_plus_r)

    def omega_pair(self, h: int, k: int) -> float:
        num = self.tanh(h) * self.tanh(k) + self.tanh_product((h, k))
        return float(num / self.one_plus_r)

    def truncated(self, h: int, k: int) -> float:
        spect = self.tanh_product((h, k))
        if spect.is_zero():
            return 0.0
        log_mag = math.fsum([spect.log_mag, -2.0 * self.log_c[h], -2.0 * self.log_c[k],
                             -2.0 * self.one_plus_r.log_mag])
        return spect.sign * math.exp(log_mag)


@dataclass
class ObservableReport:
    z: LogSigned
    omega: dict[int, float]
    omega_pair: dict[tuple[int, int], float] = field(default_factory=dict)
    truncated: dict[tuple[int, int], float] = field(default_factory=dict)
    method: Method = Method.closed_form

    def pair(self, h: int, k: int) -> float:
        return self.omega_pair[(min(h, k), max(h, k))]

    def trunc(self, h: int, k: int) -> float:
        return self.truncated[(min(h, k), max(h, k))]

    def rows(self):
        """Flat (quantity, h, k, value) rows for delimited output."""
        yield ("Z", "", "", float(self.z))
        yield ("log_Z", "", "", self.z.log_mag)
        for h in sorted(self.omega):
            yield ("omega", h, "", self.omega[h])
        for h, k in sorted(self.omega_pair):
            yield ("omega_pair", h, k, self.omega_pair[(h, k)])
        for h, k in sorted(self.truncated):
            yield ("truncated", h, k, self.truncated[(h, k)])


def partition_value(c: CouplingVector) -> LogSigned:
    """prod cosh J_i + prod sinh J_i, i.e. Z / 2^N."""
    return LogSigned(1, c._terms.log_partition())


def bond_correlation(c: CouplingVector, h: int) -> float:
    """Thermal average <sigma_h sigma_{h+1}>."""
    return c._terms.omega(check_bond(h, c.n) - 1)


def pair_correlation(c: CouplingVector, h: int, k: int) -> float:
    """Thermal average <sigma_h sigma_{h+1} sigma_k sigma_{k+1}>, h != k."""
    h, k = check_pair(h, k, c.n)
    return c._terms.omega_pair(h - 1, k - 1)


def truncated_correlation(c: CouplingVector, h: int, k: int) -> float:
    """omega_hk - omega_h omega_k from the single-product formula.

    Its sign is the sign of prod_{i != h,k} J_i; it vanishes exactly when a
    spectator coupling is zero.
    """
    h, k = check_pair(h, k, c.n)
    return c._terms.truncated(h - 1, k - 1)


def all_pairs(n: int):
    return [(h, k) for h in range(1, n + 1) for k in range(h + 1, n + 1)]


def closed_form_observables(c: CouplingVector, pairs=None) -> ObservableReport:
    """Every observable from the closed forms. ``pairs`` defaults to all h < k."""
    t = c._terms
    pairs = all_pairs(c.n) if pairs is None else [tuple(sorted(check_pair(h, k, c.n))) for h, k in pairs]
    return ObservableReport(
        z=partition_value(c),
        omega={h: t.omega(h - 1) for h in range(1, c.n + 1)},
        omega_pair={(h, k): t.omega_pair(h - 1, k - 1) for h, k in pairs},
        truncated={(h, k): t.truncated(h - 1, k - 1) for h, k in pairs},
        method=Method.closed_form,
    )


def ring_edges(n: int):
    return [(i, (i + 1) % n) for i in range(n)]


def _ground_energy(j: Sequence[float]) -> float:
    """max_sigma sum J_i b_i on a ring: every bond satisfied unless the sign product is negative."""
    mags = [abs(x) for x in j]
    frustrated = all(x != 0 for x in j) and math.prod(sign_of(x) for x in j) < 0
    return math.fsum(mags) - (2.0 * min(mags) if frustrated else 0.0)


def brute_force_observables(c: CouplingVector, exact: bool | None = None,
                            workers: int = 1) -> ObservableReport:
    """Direct summation of exp(sum J_i sigma_i sigma_{i+1}) over all 2^N spin states.

    ``exact=True`` sums integer-scaled Boltzmann factors exactly, so the only
    rounding is in exp(+-J_i) and the final divisions; truncated correlations come
    out to full relative precision however small they are. It is the default up
    to N = 12. Otherwise a float path with fixed chunking is used.
    """
    n = c.n
    if n > N_MAX_BRUTE_FORCE:
        raise ValueError(f"N = {n} exceeds the brute-force limit {N_MAX_BRUTE_FORCE}")
    if exact is None:
        exact = n <= N_MAX_EXACT_ARITHMETIC
    if exact:
        return _brute_force_exact(c)
    return _brute_force_float(c, workers)


def _scaled_boltzmann_factors(x: float) -> tuple[int, int, int]:
    """Integers U, V and shift d with exp(x) = U/2^d, exp(-x) = V/2^d (up to float rounding)."""
    nu, du = math.exp(x).as_integer_ratio()
    nv, dv = math.exp(-x).as_integer_ratio()
    d = max(du, dv)
    return nu * (d // du), nv * (d // dv), d.bit_length() - 1


def _brute_force_exact(c: CouplingVector) -> ObservableReport:
    n = c.n
    factors = [_scaled_boltzmann_factors(x) for x in c.couplings]
    # sigma_1 = +1 only: the global flip maps each state to one of equal weight
    spins = enumeration.spin_block(n, 0, 1 << n)[: 1 << (n - 1)].astype(np.int64)
    bonds = spins * np.roll(spins, -1, axis=1)
    up = np.array([f[0] for f in factors], dtype=object)
    down = np.array([f[1] for f in factors], dtype=object)
    choice = np.where(bonds > 0, up, down)
    w = np.ones(len(bonds), dtype=object)
    for i in range(n):
        w = w * choice[:, i]
    b = bonds.astype(object)
    z = int(w.sum())
    first = b.T.dot(w)
    second = (b * w[:, None]).T.dot(b)
    pairs = all_pairs(n)
    shift = sum(f[2] for f in factors) + n - 1
    try:
        log_z = math.log(z / (1 << shift))
    except (OverflowError, ValueError):
        log_z = math.log(z) - shift * math.log(2.0)
    return ObservableReport(
        z=LogSigned(1, log_z),
        omega={h: int(first[h - 1]) / z for h in range(1, n + 1)},
        omega_pair={(h, k): int(second[h - 1, k - 1]) / z for h, k in pairs},
        truncated={(h, k): (z * int(second[h - 1, k - 1]) - int(first[h - 1]) * int(first[k - 1]))
                   / (z * z) for h, k in pairs},
        method=Method.brute_force,
    )


def _brute_force_float(c: CouplingVector, workers: int) -> ObservableReport:
    n = c.n
    shift = _ground_energy(c.couplings)
    z, first, second = enumeration.spin_moments(n, ring_edges(n), c.couplings, shift, workers)
    omega = first / z
    pairs = all_pairs(n)
    return ObservableReport(
        z=LogSigned(1, math.log(z) + shift - n * math.log(2.0)),
        omega={h: float(omega[h - 1]) for h in range(1, n + 1)},
        omega_pair={(h, k): float(second[h - 1, k - 1] / z) for h, k in pairs},
        truncated={(h, k): float(second[h - 1, k - 1] / z - omega[h - 1] * omega[k - 1])
                   for h, k in pairs},
        method=Method.brute_force,
    )


class CycleError(ValueError):
    pass


def tree_bonds(parent: Sequence[int]) -> list[tuple[int, int]]:
    """Bonds (v, parent[v]) of a rooted tree given as a 0-based parent array (root: -1)."""
    n = len(parent)
    roots = [v for v, p in enumerate(parent) if p == -1]
    if len(roots) != 1:
        raise CycleError(f"parent array must have exactly one root, found {len(roots)}")
    for v, p in enumerate(parent):
        if p != -1 and not 0 <= p < n:
            raise ValueError(f"parent[{v}] = {p} out of range")
    for v in range(n):
        seen = set()
        u = v
        while u != -1:
            if u in seen:
                raise CycleError(f"parent array contains a cycle through site {u}")
            seen.add(u)
            u = parent[u]
    return [(v, p) for v, p in enumerate(parent) if p != -1]


def free_boundary_observables(couplings: Sequence[float],
                              parent: Sequence[int] | None = None) -> ObservableReport:
    """Observables on an open chain or a tree, where Z factorizes.

    Without ``parent`` the couplings are the N-1 bonds of an open chain. With a
    parent array, coupling b belongs to the b-th non-root site in increasing order
    and the bond joins it to its parent. Bond weights (the lambda_i of the
    factorized Z) are taken as 1.
    """
    j = [float(x) for x in couplings]
    if not all(math.isfinite(x) for x in j):
        raise ValueError("couplings must be finite")
    if parent is not None:
        bonds = tree_bonds(parent)
        if len(bonds) != len(j):
            raise ValueError(f"tree has {len(bonds)} bonds but {len(j)} couplings were given")
    if not j:
        raise ValueError("need at least one bond")
    t = [math.tanh(x) for x in j]
    pairs = all_pairs(len(j))
    return ObservableReport(
        z=LogSigned(1, math.fsum(log_cosh(x) for x in j)),
        omega={h: t[h - 1] for h in range(1, len(j) + 1)},
        omega_pair={(h, k): t[h - 1] * t[k - 1] for h, k in pairs},
        truncated={p: 0.0 for p in pairs},
        method=Method.closed_form,
    )


def batch_terms(rows: np.ndarray):
    """Vectorized log|tanh|, sign and log cosh for an (R, N) array of couplings."""
    a = np.abs(rows)
    with np.errstate(divide="ignore"):
        e = np.exp(-2.0 * a)
        log_t = np.where(a < 0.5, np.log(np.tanh(a)), np.log1p(-2.0 * e / (1.0 + e)))
    log_t = np.where(a == 0.0, LOG_ZERO, log_t)
    log_c = a + np.log1p(np.exp(-2.0 * a)) - math.log(2.0)
    return log_t, np.sign(rows), log_c


def _batch_excluded(log_t, sign, skip):
    keep = [i for i in range(log_t.shape[1]) if i not in skip]
    return log_t[:, keep].sum(axis=1), np.prod(sign[:, keep], axis=1)


def _batch_add(la, sa, lb, sb):
    """Signed log-sum-exp of two LogSigned columns."""
    big = np.maximum(la, lb)
    small = np.minimum(la, lb)
    sbig = np.where(la >= lb, sa, sb)
    ssmall = np.where(la >= lb, sb, sa)
    with np.errstate(invalid="ignore", divide="ignore"):
        d = np.where(np.isfinite(big), small - big, LOG_ZERO)
        same = sbig * ssmall >= 0
        mag = np.where(same, np.log1p(np.exp(d)), np.log(-np.expm1(d)))
        log = big + mag
    sign = np.where(np.isneginf(log), 0.0, np.where(sbig == 0, ssmall, sbig))
    return log, sign


def batch_bond_correlation(rows: np.ndarray, h: int) -> np.ndarray:
    """bond_correlation for each row of an (R, N) coupling array."""
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    i = check_bond(h, rows.shape[1]) - 1
    log_t, sign, _ = batch_terms(rows)
    lr, sr = _batch_excluded(log_t, sign, ())
    ld, sd = _batch_add(np.zeros(len(rows)), np.ones(len(rows)), lr, sr)
    lx, sx = _batch_excluded(log_t, sign, (i,))
    ln, sn = _batch_add(log_t[:, i], sign[:, i], lx, sx)
    with np.errstate(invalid="ignore"):
        return np.where(sn == 0, 0.0, sn * sd * np.exp(ln - ld))


def batch_truncated_correlation(rows: np.ndarray, h: int, k: int) -> np.ndarray:
    """truncated_correlation for each row of an (R, N) coupling array."""
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    h, k = check_pair(h, k, rows.shape[1])
    i, j = h - 1, k - 1
    log_t, sign, log_c = batch_terms(rows)
    lr, sr = _batch_excluded(log_t, sign, ())
    ld, _ = _batch_add(np.zeros(len(rows)), np.ones(len(rows)), lr, sr)
    ls, ss = _batch_excluded(log_t, sign, (i, j))
    with np.errstate(invalid="ignore"):
        val = ss * np.exp(ls - 2.0 * log_c[:, i] - 2.0 * log_c[:, j] - 2.0 * ld)
    return np.where(ss == 0, 0.0, val)

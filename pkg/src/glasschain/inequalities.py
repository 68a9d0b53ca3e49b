"""Correlation-inequality checks for the disordered periodic chain.

First inequality:  Av[J_h omega_h] > 0.
Second inequality: Av[J_h J_k (omega_hk - omega_h omega_k)] < 0 for symmetric disorder.
With bias alpha = prod (p_i - q_i) > 0 the averaged truncated term has the sign of

    g(alpha) = alpha (prod C_i^2 + prod S_i^2) - 2 prod C_i S_i,

which vanishes at alpha* = 2 prod t_i / (1 + prod t_i^2), t_i = tanh J^(i).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize

from glasschain.chain import check_bond, check_pair
from glasschain.disorder import (
    BondEnergy,
    DisorderModel,
    LawKind,
    TruncatedEnergy,
    monte_carlo_average,
    quenched_terms,
    uniform_alpha_model,
)
from glasschain.logsigned import log_abs_sinh, log_abs_tanh, log_cosh

REL_TOL = 1e-12
MC_SIGMAS = 5.0


class Verdict(str, enum.Enum):
    positive = "positive"
    negative = "negative"
    zero = "zero"


@dataclass(frozen=True)
class SignVerdict:
    value: float
    tolerance: float
    verdict: Verdict
    context: dict = field(default_factory=dict, compare=False)

    @classmethod
    def of(cls, value: float, tolerance: float, **context) -> SignVerdict:
        if abs(value) <= tolerance:
            v = Verdict.zero
        else:
            v = Verdict.positive if value > 0 else Verdict.negative
        return cls(value, tolerance, v, context)


@dataclass(frozen=True)
class CurvePoint:
    j_l: float
    alpha_star: float


def sign_bias(m: DisorderModel) -> float | None:
    """prod_i (P(J_i > 0) - P(J_i < 0)) for discrete models; equals alpha for bernoulli."""
    if not m.is_discrete:
        return None
    return math.prod(
        math.fsum(p * ((v > 0) - (v < 0)) for v, p in zip(law.values, law.probs))
        for law in m.laws)


def classify(m: DisorderModel) -> frozenset[str]:
    """Disorder classes the model belongs to; ambiguous models get every match.

    I:   every law has p(|J|) >= p(-|J|).
    II:  every law is symmetric about a non-negative mean.
    III: every law is bernoulli and alpha >= 0.
    """
    classes = set()
    if all(law.positively_biased() for law in m.laws):
        classes.add("I")
    centers = [law.symmetric_center() for law in m.laws]
    if all(c is not None and c >= 0 for c in centers):
        classes.add("II")
    if m.all_kind(LawKind.bernoulli) and sign_bias(m) >= 0:
        classes.add("III")
    return frozenset(classes)


def second_inequality_hypotheses(m: DisorderModel) -> dict[str, bool]:
    """The two readings of the second inequality's hypothesis, evaluated on m."""
    sym = [law.symmetric_center() == 0.0 for law in m.laws]
    bias = sign_bias(m)
    return {
        "all_bonds_symmetric": all(sym),
        "some_bond_symmetric": any(sym),
        "alpha_zero": bias is not None and bias == 0.0,
    }


def _verdict(m: DisorderModel, f, rel_tol: float, n_samples: int | None, seed: int | None,
             workers: int, **context) -> SignVerdict:
    if m.is_discrete:
        terms = quenched_terms(m, f, workers)
        value = math.fsum(terms)
        # roundoff of an fsum of accurately evaluated terms is far below this
        tol = rel_tol * math.fsum(np.abs(terms))
        return SignVerdict.of(value, tol, method="exact", **context)
    if n_samples is None or seed is None:
        raise ValueError("continuous models need n_samples and seed")
    mean, stderr = monte_carlo_average(m, f, n_samples, seed, workers=workers)
    return SignVerdict.of(mean, MC_SIGMAS * stderr, method="monte_carlo", stderr=stderr,
                          n_samples=n_samples, seed=seed, **context)


def check_first_inequality(m: DisorderModel, h: int, *, rel_tol: float = REL_TOL,
                           n_samples: int | None = None, seed: int | None = None,
                           workers: int = 1) -> SignVerdict:
    """Verdict on Av[J_h omega_h]; the expected verdict is positive.

    Exact enumeration for discrete models (zero band: rel_tol times the sum of
    |terms|), Monte Carlo for continuous ones (zero band: 5 standard errors).
    """
    check_bond(h, m.n)
    classes = classify(m)
    if not classes:
        raise ValueError("model fits none of the disorder classes I, II, III")
    return _verdict(m, BondEnergy(h), rel_tol, n_samples, seed, workers,
                    h=h, classes=sorted(classes))


def check_second_inequality(m: DisorderModel, h: int, k: int, *, rel_tol: float = REL_TOL,
                            n_samples: int | None = None, seed: int | None = None,
                            workers: int = 1) -> SignVerdict:
    """Verdict on Av[J_h J_k (omega_hk - omega_h omega_k)].

    The negative sign is guaranteed only for symmetric disorder; other models are
    evaluated all the same and the hypotheses that hold are put in the context.
    """
    h, k = check_pair(h, k, m.n)
    return _verdict(m, TruncatedEnergy(h, k), rel_tol, n_samples, seed, workers,
                    h=h, k=k, classes=sorted(classify(m)),
                    hypotheses=second_inequality_hypotheses(m))


def _check_magnitudes(magnitudes: Sequence[float]) -> list[float]:
    mags = [float(x) for x in magnitudes]
    if len(mags) < 2:
        raise ValueError("need at least 2 magnitudes")
    bad = [x for x in mags if not (x > 0 and math.isfinite(x))]
    if bad:
        raise ValueError(f"magnitudes must be positive and finite, got {bad[0]!r}")
    return mags


def _log_tanh_product(mags: Sequence[float]) -> float:
    return math.fsum(log_abs_tanh(x) for x in mags)


def g_normalized(alpha: float, magnitudes: Sequence[float]) -> float:
    """g / prod C_i^2 = alpha (1 + T^2) - 2 T with T = prod tanh J^(i); never overflows."""
    t = math.exp(_log_tanh_product(_check_magnitudes(magnitudes)))
    return alpha * (1.0 + t * t) - 2.0 * t


def g_function(alpha: float, magnitudes: Sequence[float]) -> float:
    """alpha (prod C_i^2 + prod S_i^2) - 2 prod C_i S_i."""
    mags = _check_magnitudes(magnitudes)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha!r}")
    log_c = math.fsum(log_cosh(x) for x in mags)
    log_s = math.fsum(log_abs_sinh(x) for x in mags)
    a = math.exp(2.0 * log_c) + math.exp(2.0 * log_s)
    return alpha * a - 2.0 * math.exp(log_c + log_s)


def g_slope(magnitudes: Sequence[float]) -> float:
    """dg/dalpha = prod C_i^2 + prod S_i^2."""
    mags = _check_magnitudes(magnitudes)
    return (math.exp(2.0 * math.fsum(log_cosh(x) for x in mags))
            + math.exp(2.0 * math.fsum(log_abs_sinh(x) for x in mags)))


def critical_alpha(magnitudes: Sequence[float]) -> float:
    """Root of g: 2 prod C_i S_i / (prod C_i^2 + prod S_i^2), in tanh form."""
    t = math.exp(_log_tanh_product(_check_magnitudes(magnitudes)))
    return 2.0 * t / (1.0 + t * t)


def critical_alpha_curve(magnitudes: Sequence[float], l: int,
                         j_grid: Sequence[float]) -> list[CurvePoint]:
    """alpha* as J^(l) runs over j_grid with the other magnitudes held fixed."""
    mags = _check_magnitudes(magnitudes)
    check_bond(l, len(mags))
    grid = [float(x) for x in j_grid]
    if not grid or any(not (x > 0 and math.isfinite(x)) for x in grid):
        raise ValueError("j_grid must be a non-empty sequence of positive finite values")
    points = []
    for j in grid:
        mags[l - 1] = j
        points.append(CurvePoint(j, critical_alpha(mags)))
    return points


def averaged_truncated(magnitudes: Sequence[float], alpha: float, h: int = 1, k: int = 2) -> float:
    """Exact enumerated Av[J_h J_k (omega_hk - omega_h omega_k)] for the uniform-alpha model."""
    m = uniform_alpha_model(_check_magnitudes(magnitudes), alpha)
    return math.fsum(quenched_terms(m, TruncatedEnergy(h, k)))


def bisect_critical_alpha(magnitudes: Sequence[float], h: int = 1, k: int = 2,
                          xtol: float = 1e-10) -> float:
    """Sign change of the enumerated average in alpha on [0, 1], by bisection.

    Independent of the closed-form curve: only the exact disorder average is used.
    """
    return optimize.bisect(lambda a: averaged_truncated(magnitudes, a, h, k), 0.0, 1.0,
                           xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=200)


@dataclass
class MonotonicityReport:
    monotone: bool
    alphas: list[float]
    g_values: list[float]
    averages: list[float]
    first_violation: tuple[str, int] | None = None  # (series, index i with x[i+1] <= x[i])

    def sign_change(self) -> tuple[float, float] | None:
        """Grid bracket where the average goes from negative to non-negative."""
        for i in range(len(self.averages) - 1):
            if self.averages[i] < 0 <= self.averages[i + 1]:
                return self.alphas[i], self.alphas[i + 1]
        return None


def monotonicity_check(magnitudes: Sequence[float], alpha_grid: Sequence[float],
                       h: int = 1, k: int = 2) -> MonotonicityReport:
    """Both g and the enumerated average must increase strictly along the alpha grid."""
    mags = _check_magnitudes(magnitudes)
    check_pair(h, k, len(mags))
    alphas = [float(a) for a in alpha_grid]
    if len(alphas) < 2 or any(not 0 <= a <= 1 for a in alphas):
        raise ValueError("alpha_grid needs at least 2 points in [0, 1]")
    if any(b <= a for a, b in zip(alphas, alphas[1:])):
        raise ValueError("alpha_grid must be strictly increasing")
    gs = [g_function(a, mags) for a in alphas]
    avs = [averaged_truncated(mags, a, h, k) for a in alphas]
    violation = None
    for name, series in (("g", gs), ("average", avs)):
        for i in range(len(series) - 1):
            if not series[i + 1] > series[i]:
                violation = (name, i)
                break
        if violation:
            break
    return MonotonicityReport(violation is None, alphas, gs, avs, violation)


def scan_alpha(magnitudes: Sequence[float], alpha_grid: Sequence[float], h: int = 1, k: int = 2,
               rel_tol: float = REL_TOL) -> list[tuple[float, float, float, Verdict]]:
    """Rows (alpha, average, g, verdict) for the uniform-alpha model."""
    mags = _check_magnitudes(magnitudes)
    check_pair(h, k, len(mags))
    rows = []
    for a in alpha_grid:
        m = uniform_alpha_model(mags, float(a))
        v = check_second_inequality(m, h, k, rel_tol=rel_tol)
        rows.append((float(a), v.value, g_function(float(a), mags), v.verdict))
    return rows

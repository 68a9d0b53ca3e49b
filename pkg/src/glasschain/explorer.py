"""Brute-force engine for small bond graphs and scans for sign violations of the
second inequality (chain plus a chord; asymmetric zero-mean disorder).
"""

from __future__ import annotations

import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from glasschain import enumeration
from glasschain.chain import Method, ObservableReport, all_pairs
from glasschain.disorder import (
    BondLaw,
    DisorderModel,
    TruncatedEnergy,
    bernoulli,
    gray_rows,
    law_from_config,
    quenched_terms,
    shifted_symmetric,
    zero_mean_two_point,
)
from glasschain.inequalities import REL_TOL
from glasschain.logsigned import LogSigned

MAX_SITES = 12
MAX_BONDS = 14
REALIZATION_CHUNK = 1024

DEFAULT_CHORD_SIZES = (4, 5, 6)
DEFAULT_MAGNITUDES = (0.5, 1.0, 2.0, 4.0)
DEFAULT_ASYM_SIZES = (3, 4, 5, 6)
DEFAULT_ASYM_VALUES = (0.25, 0.5, 1.0, 2.0, 4.0)
DEFAULT_CONTROL_SIZES = (3, 4, 5, 6)


@dataclass(frozen=True)
class BondGraph:
    """Sites 1..n_sites; bond b (1-based) joins bonds[b-1][0] and bonds[b-1][1]."""

    n_sites: int
    bonds: tuple[tuple[int, int, BondLaw], ...]
    topology: str = "graph"

    def __post_init__(self):
        object.__setattr__(self, "bonds", tuple(tuple(b) for b in self.bonds))
        if not 2 <= self.n_sites <= MAX_SITES:
            raise ValueError(f"n_sites must be in 2..{MAX_SITES}, got {self.n_sites}")
        if not 1 <= len(self.bonds) <= MAX_BONDS:
            raise ValueError(f"bond count must be in 1..{MAX_BONDS}, got {len(self.bonds)}")
        seen = set()
        for i, j, _ in self.bonds:
            if not (1 <= i <= self.n_sites and 1 <= j <= self.n_sites):
                raise ValueError(f"bond ({i}, {j}) has an endpoint outside 1..{self.n_sites}")
            if i == j:
                raise ValueError(f"self-loop at site {i}")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ValueError(f"duplicate bond {key}")
            seen.add(key)
        if not self._connected():
            raise ValueError("graph is not connected")

    def _connected(self) -> bool:
        adj = {v: set() for v in range(1, self.n_sites + 1)}
        for i, j, _ in self.bonds:
            adj[i].add(j)
            adj[j].add(i)
        stack, seen = [1], {1}
        while stack:
            for w in adj[stack.pop()] - seen:
                seen.add(w)
                stack.append(w)
        return len(seen) == self.n_sites

    @property
    def edges(self) -> list[tuple[int, int]]:
        """0-based endpoints."""
        return [(i - 1, j - 1) for i, j, _ in self.bonds]

    @property
    def laws(self) -> tuple[BondLaw, ...]:
        return tuple(b[2] for b in self.bonds)

    def is_tree(self) -> bool:
        return len(self.bonds) == self.n_sites - 1

    def describe(self) -> dict:
        return {"topology": self.topology, "n_sites": self.n_sites,
                "bonds": [[i, j] for i, j, _ in self.bonds]}

    @classmethod
    def ring(cls, laws: Sequence[BondLaw]) -> BondGraph:
        n = len(laws)
        return cls(n, tuple((i + 1, (i + 1) % n + 1, law) for i, law in enumerate(laws)), "ring")

    @classmethod
    def ring_with_chord(cls, laws: Sequence[BondLaw], chord: tuple[int, int],
                        chord_law: BondLaw) -> BondGraph:
        n = len(laws)
        i, j = chord
        gap = (j - i) % n
        if not (1 <= i <= n and 1 <= j <= n) or gap in (0, 1, n - 1):
            raise ValueError(f"chord {chord} must join two non-adjacent sites of the {n}-ring")
        ring = cls.ring(laws)
        return cls(n, ring.bonds + ((i, j, chord_law),), "ring+chord")


def graph_observables(g: BondGraph, realization: Sequence[float]) -> ObservableReport:
    """Exact thermal observables by summing over all 2^n_sites spin states."""
    j = np.asarray(realization, dtype=np.float64)
    if j.shape != (len(g.bonds),):
        raise ValueError(f"need {len(g.bonds)} couplings, got shape {j.shape}")
    spins = enumeration.spin_block(g.n_sites, 0, 1 << g.n_sites)
    bonds = enumeration.bond_block(spins, g.edges)
    energy = bonds @ j
    top = energy.max()
    w = np.exp(energy - top)
    z = math.fsum(w)
    omega = bonds.T @ w / z
    second = bonds.T @ (bonds * w[:, None]) / z
    pairs = all_pairs(len(g.bonds))
    return ObservableReport(
        z=LogSigned(1, math.log(z) + top - g.n_sites * math.log(2.0)),
        omega={h: float(omega[h - 1]) for h in range(1, len(g.bonds) + 1)},
        omega_pair={(h, k): float(second[h - 1, k - 1]) for h, k in pairs},
        truncated={(h, k): float(second[h - 1, k - 1] - omega[h - 1] * omega[k - 1])
                   for h, k in pairs},
        method=Method.brute_force,
    )


def graph_pair_averages(g: BondGraph) -> dict[tuple[int, int], tuple[float, float]]:
    """Exact Av[J_h J_k (omega_hk - omega_h omega_k)] for every bond pair, with its tolerance.

    The tolerance is REL_TOL times Av|J_h J_k|: the thermal averages are O(1)
    numbers whose difference carries absolute roundoff, not relative.
    """
    model = DisorderModel(g.laws)
    if not model.is_discrete:
        raise ValueError("graph averages need discrete laws")
    m = len(g.bonds)
    pairs0 = [(h - 1, k - 1) for h, k in all_pairs(m)]
    spins = enumeration.spin_block(g.n_sites, 0, 1 << g.n_sites)
    bonds = enumeration.bond_block(spins, g.edges)
    terms = {p: [] for p in pairs0}
    scales = {p: [] for p in pairs0}
    total = 1 << m
    for start in range(0, total, REALIZATION_CHUNK):
        rows, probs = gray_rows(model, start, min(start + REALIZATION_CHUNK, total))
        omega, pair_omega = enumeration.batch_moments(bonds, rows, pairs0)
        for c, (h, k) in enumerate(pairs0):
            jj = probs * rows[:, h] * rows[:, k]
            terms[(h, k)].append(jj * (pair_omega[:, c] - omega[:, h] * omega[:, k]))
            scales[(h, k)].append(np.abs(jj))
    return {(h + 1, k + 1): (math.fsum(np.concatenate(terms[(h, k)])),
                             REL_TOL * math.fsum(np.concatenate(scales[(h, k)])))
            for h, k in pairs0}


def chain_pair_averages(laws: Sequence[BondLaw]) -> dict[tuple[int, int], tuple[float, float]]:
    """Same as graph_pair_averages for a periodic chain, through the closed forms."""
    model = DisorderModel(tuple(laws))
    out = {}
    for h, k in all_pairs(model.n):
        t = quenched_terms(model, TruncatedEnergy(h, k))
        out[(h, k)] = (math.fsum(t), REL_TOL * math.fsum(np.abs(t)))
    return out


@dataclass
class ViolationRecord:
    graph: dict
    laws: list[dict]
    pair: tuple[int, int]
    value: float
    tolerance: float

    @property
    def verdict(self) -> str:
        return "positive" if self.value > self.tolerance else "not_positive"

    def to_json(self) -> str:
        d = asdict(self)
        d["pair"] = list(self.pair)
        return json.dumps(d, sort_keys=False)

    @classmethod
    def from_json(cls, line: str) -> ViolationRecord:
        d = json.loads(line)
        return cls(d["graph"], d["laws"], tuple(d["pair"]), d["value"], d["tolerance"])


def graph_from_description(desc: dict, laws: Sequence[dict]) -> BondGraph:
    parsed = [law_from_config(x) for x in laws]
    return BondGraph(desc["n_sites"],
                     tuple((i, j, law) for (i, j), law in zip(desc["bonds"], parsed)),
                     desc.get("topology", "graph"))


def _evaluate(g: BondGraph):
    if g.topology == "ring":
        return chain_pair_averages(g.laws)
    return graph_pair_averages(g)


def replay(record: ViolationRecord) -> float:
    """Re-evaluate the stored configuration and return the averaged value."""
    g = graph_from_description(record.graph, record.laws)
    return _evaluate(g)[tuple(record.pair)][0]


@dataclass
class ScanResult:
    scan: str
    records: list[ViolationRecord] = field(default_factory=list)
    grid_points: int = 0
    pairs_checked: int = 0
    max_value: float = -math.inf
    grid: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "scan": self.scan,
            "grid": self.grid,
            "grid_points": self.grid_points,
            "pairs_checked": self.pairs_checked,
            "violations": len(self.records),
            "max_value": self.max_value,
            "none_found_in_grid": not self.records,
        }

    def merge(self, g: BondGraph, averages) -> None:
        self.grid_points += 1
        desc, laws = g.describe(), [law.config() for law in g.laws]
        for pair, (value, tol) in averages.items():
            self.pairs_checked += 1
            self.max_value = max(self.max_value, value)
            if value > tol:
                self.records.append(ViolationRecord(desc, laws, pair, value, tol))


def _run(graphs: list[BondGraph], workers: int):
    if workers > 1 and len(graphs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_evaluate, graphs))
    return [_evaluate(g) for g in graphs]


def _scan(name: str, graphs: list[BondGraph], grid: dict, workers: int) -> ScanResult:
    result = ScanResult(name, grid=grid)
    for g, averages in zip(graphs, _run(graphs, workers)):
        result.merge(g, averages)
    return result


def _symmetric(magnitude: float) -> BondLaw:
    return bernoulli(magnitude, 0.5) if magnitude > 0 else shifted_symmetric(0.0, 0.0)


def search_chord_violation(base_n: int, chord: tuple[int, int],
                           magnitude_grid: Sequence[float] = DEFAULT_MAGNITUDES,
                           chord_grid: Sequence[float] | None = None,
                           workers: int = 1) -> ScanResult:
    """Symmetric +-J ring of base_n sites plus one chord; ring and chord magnitudes
    run over the grids and every bond pair is checked for a positive average."""
    chord_grid = magnitude_grid if chord_grid is None else chord_grid
    graphs = []
    for jr, jc in itertools.product(magnitude_grid, chord_grid):
        if not jr > 0 or jc < 0:
            raise ValueError("ring magnitudes must be positive and chord magnitudes >= 0")
        graphs.append(BondGraph.ring_with_chord([_symmetric(jr)] * base_n, chord, _symmetric(jc)))
    grid = {"base_n": base_n, "chord": list(chord), "ring_magnitudes": list(magnitude_grid),
            "chord_magnitudes": list(chord_grid)}
    return _scan("chord", graphs, grid, workers)


def search_asymmetric_violation(sizes: Sequence[int] = DEFAULT_ASYM_SIZES,
                                value_grid: Sequence[float] = DEFAULT_ASYM_VALUES,
                                workers: int = 1) -> ScanResult:
    """Periodic chains whose bonds all follow the zero-mean law {+a, -b}, over a, b in the grid."""
    graphs = []
    for n in sizes:
        if not 2 <= n <= MAX_SITES:
            raise ValueError(f"chain size {n} outside 2..{MAX_SITES}")
        for a, b in itertools.product(value_grid, value_grid):
            graphs.append(BondGraph.ring([zero_mean_two_point(a, b)] * n))
    grid = {"sizes": list(sizes), "values": list(value_grid)}
    return _scan("asymmetric", graphs, grid, workers)


def chain_control_scan(sizes: Sequence[int] = DEFAULT_CONTROL_SIZES,
                       magnitude_grid: Sequence[float] = DEFAULT_MAGNITUDES,
                       workers: int = 1) -> ScanResult:
    """Plain rings with symmetric +-J disorder, evaluated by graph brute force.
    The second inequality holds here, so no records are expected."""
    graphs = [BondGraph(n, BondGraph.ring([_symmetric(j)] * n).bonds, "graph")
              for n in sizes for j in magnitude_grid]
    return _scan("control", graphs, {"sizes": list(sizes), "magnitudes": list(magnitude_grid)},
                 workers)


def default_chords(n: int) -> list[tuple[int, int]]:
    """Chords from site 1 to every non-adjacent site; other chords are rotations of these."""
    return [(1, j) for j in range(3, n)]


def default_scans(workers: int = 1) -> list[ScanResult]:
    scans = [chain_control_scan(workers=workers)]
    for n in DEFAULT_CHORD_SIZES:
        for chord in default_chords(n):
            scans.append(search_chord_violation(n, chord, workers=workers))
    scans.append(search_asymmetric_violation(workers=workers))
    return scans


def write_jsonl(records: Sequence[ViolationRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(r.to_json() + "\n")


def read_jsonl(path) -> list[ViolationRecord]:
    with open(path, encoding="utf-8") as fh:
        return [ViolationRecord.from_json(line) for line in fh if line.strip()]

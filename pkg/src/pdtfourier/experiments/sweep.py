"""Batch runs over parameter grids, written as CSV with one row per (instance, level)."""

from __future__ import annotations

import csv
import io
import itertools
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from ..cleanup import cleanup_tree
from ..fourier import bound_report, spectrum_via_leaves
from ..noisy import noisy_bound_report, random_noisy_tree
from ..pdt import QUERY_POLICIES, random_pdt
from .walks import level_mass_via_walks

SWEEP_KINDS = ("pdt-bounds", "noisy-bounds", "walks")

COLUMNS = {
    "pdt-bounds": ["n", "depth", "instance", "policy", "level", "mass", "p", "size",
                   "exact_bound", "exact_pass", "km_pass", "growth_ratio"],
    "noisy-bounds": ["n", "depth", "instance", "cost", "level", "mass", "p",
                     "parseval_check", "growth_ratio"],
    "walks": ["n", "depth", "instance", "k", "level", "exact_mass", "walk_estimate",
              "stderr", "within_4se"],
}


@dataclass(frozen=True)
class SweepConfig:
    kind: str = "pdt-bounds"
    master_seed: int = 0
    n: tuple[int, ...] = ()
    depth: tuple[int, ...] = ()
    levels: tuple[int, ...] = (1,)
    instances: int = 1
    policy: str = "uniform"
    k: int = 3
    cost: float = 2.0
    trials: int = 10_000

    def __post_init__(self):
        if self.kind not in SWEEP_KINDS:
            raise ValueError(f"unknown sweep kind {self.kind!r}; use one of {SWEEP_KINDS}")
        if self.policy not in QUERY_POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}")
        if self.instances < 0 or self.trials < 2 or self.k < 2:
            raise ValueError("need instances >= 0, trials >= 2, k >= 2")
        for n in self.n:
            if not 1 <= n <= 16:
                raise ValueError(f"n={n} outside [1, 16]")
        if any(d < 0 for d in self.depth) or any(ell < 0 for ell in self.levels):
            raise ValueError("depths and levels must be >= 0")

    @classmethod
    def from_dict(cls, doc: dict) -> "SweepConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        vals = {k: tuple(v) if isinstance(v, list) else v for k, v in doc.items()}
        return cls(**vals)

    @classmethod
    def from_json(cls, text: str) -> "SweepConfig":
        return cls.from_dict(json.loads(text))


def instance_rng(cfg: SweepConfig, n: int, depth: int, idx: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([cfg.master_seed, n, depth, idx]))


def _rows_for(args) -> list[list]:
    cfg, n, depth, idx = args
    rng = instance_rng(cfg, n, depth, idx)
    levels = [ell for ell in cfg.levels if ell <= n]
    if cfg.kind == "pdt-bounds":
        tree = random_pdt(n, depth, cfg.policy, rng=rng)
        rep = bound_report(tree, levels)
        return [[n, depth, idx, cfg.policy, r.level, str(r.mass), str(rep.p), rep.s,
                 "" if r.bound is None else str(r.bound),
                 "" if r.passed is None else ("PASS" if r.passed else "FAIL"),
                 "PASS" if rep.km_pass else "FAIL", f"{r.ratio:.6g}"] for r in rep.rows]
    if cfg.kind == "noisy-bounds":
        tree = random_noisy_tree(n, depth, cfg.cost, rng=rng)
        rep = noisy_bound_report(tree, levels)
        return [[n, depth, idx, f"{float(rep.cost):.12g}", r.level, f"{float(r.mass):.12g}",
                 f"{float(rep.p):.12g}", "PASS" if rep.passed else "FAIL", f"{r.ratio:.6g}"]
                for r in rep.rows]
    tree = random_pdt(n, depth, cfg.policy, rng=rng)
    ct = cleanup_tree(tree, cfg.k)
    spec = spectrum_via_leaves(ct.tree)
    out = []
    for ell in levels:
        if ell > cfg.k:
            continue
        exact = spec.level_mass(ell)
        est = level_mass_via_walks(ct, ell, cfg.trials, seed=int(rng.integers(1 << 62)))
        ok = abs(est.value - float(exact)) <= 4 * est.stderr + 1e-12
        out.append([n, depth, idx, cfg.k, ell, str(exact), f"{est.value:.6g}",
                    f"{est.stderr:.3g}", "PASS" if ok else "FAIL"])
    return out


def sweep(cfg: SweepConfig, jobs: int = 1) -> str:
    """Run the grid and return CSV text; output is independent of ``jobs``."""
    tasks = [(cfg, n, d, i) for n, d, i in itertools.product(cfg.n, cfg.depth, range(cfg.instances))
             if cfg.kind == "noisy-bounds" or d <= n]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_rows_for, tasks))
    else:
        chunks = [_rows_for(t) for t in tasks]
    rows = sorted((r for chunk in chunks for r in chunk), key=lambda r: tuple(r[:3]) + (r[4],))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS[cfg.kind])
    w.writerows(rows)
    return buf.getvalue()

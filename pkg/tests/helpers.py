"""Shared random-instance builders for the test suite."""
import numpy as np

from sogl import GroupStructure, ProxInstance


def random_structure(rng, n=None, m=None, max_n=8, max_m=3, weighted=False):
    n = n if n is not None else int(rng.integers(2, max_n + 1))
    m = m if m is not None else int(rng.integers(1, max_m + 1))
    groups = [
        sorted(rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False).tolist())
        for _ in range(m)
    ]
    weights = rng.uniform(0.3, 2.0, m) if weighted else None
    return GroupStructure(n=n, groups=groups, weights=weights)


def random_instance(rng, gs, lam0_range=(0.0, 0.0), lam1_range=(0.0, 1.0),
                    lam_range=(0.0, 0.0), s_range=(0.5, 2.0), v_scale=2.0):
    def draw(lo_hi):
        lo, hi = lo_hi
        return lo if hi <= lo else float(rng.uniform(lo, hi))

    return ProxInstance(
        v=rng.normal(0.0, v_scale, gs.n),
        s=draw(s_range),
        lam0=draw(lam0_range),
        lam1=draw(lam1_range),
        lam=draw(lam_range),
    )

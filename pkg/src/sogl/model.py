"""Group structures, thresholding primitives, and the composite objective.

Everything here is a pure function of its inputs; structures are plain
dataclasses wrapping numpy arrays and are safe to share across threads.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GroupStructure",
    "ProxInstance",
    "BlockVector",
    "group_soft_threshold",
    "hard_threshold",
    "gather",
    "scatter_add",
    "group_norm_sum",
    "weighted_group_norm",
    "objective_value",
]


@dataclass
class GroupStructure:
    """Index groups over ``n`` variables, with per-group positive weights.

    Groups may overlap arbitrarily (including duplicated groups); variables
    covered by no group are allowed. Indices are 0-based.

    Attributes
    ----------
    n : int
        Number of global variables.
    groups : list of int arrays
        ``groups[i]`` holds the distinct global indices of group ``i``.
    weights : float array, shape (m,)
        Strictly positive per-group weights. Defaults to all ones.
    overlap_counts : int array, shape (n,)
        ``overlap_counts[g]`` is the number of groups containing ``g``.
    membership : list of list of (int, int)
        For each global index ``g``, the ``(i, j)`` pairs such that
        ``groups[i][j] == g``.
    """

    n: int
    groups: list
    weights: np.ndarray = None
    overlap_counts: np.ndarray = field(init=False)
    membership: list = field(init=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        self.groups = [np.asarray(g, dtype=np.intp) for g in self.groups]
        m = len(self.groups)
        if self.weights is None:
            self.weights = np.ones(m)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (m,):
            raise ValueError(
                f"weights must have one entry per group ({m}), got shape {self.weights.shape}"
            )
        if m and not np.all(self.weights > 0):
            raise ValueError("all group weights must be strictly positive")
        for i, g in enumerate(self.groups):
            if g.size == 0:
                raise ValueError(f"group {i} is empty")
            if g.min() < 0 or g.max() >= self.n:
                raise ValueError(f"group {i} has an index outside [0, {self.n})")
            if np.unique(g).size != g.size:
                raise ValueError(f"group {i} has repeated indices")
        # flat index map: concatenation of all groups, block i at
        # offsets[i]:offsets[i+1]; gather/scatter run off this single array
        self.sizes = np.array([g.size for g in self.groups], dtype=np.intp)
        self.offsets = np.concatenate([[0], np.cumsum(self.sizes)]).astype(np.intp)
        self.flat_index = (
            np.concatenate(self.groups) if m else np.zeros(0, dtype=np.intp)
        )
        counts = np.zeros(self.n, dtype=np.intp)
        np.add.at(counts, self.flat_index, 1)
        self.overlap_counts = counts
        self.membership = [[] for _ in range(self.n)]
        for i, g in enumerate(self.groups):
            for j, idx in enumerate(g):
                self.membership[idx].append((i, j))

    @property
    def m(self) -> int:
        """Number of groups."""
        return len(self.groups)

    @property
    def total_size(self) -> int:
        """Sum of group sizes (length of the stacked block vector)."""
        return int(self.sizes.sum()) if self.m else 0


@dataclass
class ProxInstance:
    """One prox problem: center ``v``, step ``s``, and penalty levels.

    ``lam0`` scales the nonzero count, ``lam1`` the sum of group norms in
    the main objective, and ``lam`` the weighted group term used by the
    bound problems.
    """

    v: np.ndarray
    s: float = 1.0
    lam0: float = 0.0
    lam1: float = 0.0
    lam: float = 0.0

    def __post_init__(self):
        self.v = np.asarray(self.v, dtype=float)
        if self.v.ndim != 1:
            raise ValueError("v must be a 1-D vector")
        if not self.s > 0:
            raise ValueError(f"step s must be positive, got {self.s}")
        for name in ("lam0", "lam1", "lam"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    @property
    def n(self) -> int:
        return self.v.size


@dataclass
class BlockVector:
    """Per-group blocks aligned with a :class:`GroupStructure`."""

    blocks: list

    def __post_init__(self):
        self.blocks = [np.asarray(b, dtype=float) for b in self.blocks]

    @classmethod
    def zeros(cls, gs: GroupStructure) -> "BlockVector":
        return cls([np.zeros(sz) for sz in gs.sizes])

    def copy(self) -> "BlockVector":
        return BlockVector([b.copy() for b in self.blocks])

    def concat(self) -> np.ndarray:
        if not self.blocks:
            return np.zeros(0)
        return np.concatenate(self.blocks)

    def norm(self) -> float:
        return float(np.linalg.norm(self.concat()))

    def __len__(self) -> int:
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)

    def __getitem__(self, i) -> np.ndarray:
        return self.blocks[i]

    def __add__(self, other: "BlockVector") -> "BlockVector":
        return BlockVector([a + b for a, b in zip(self.blocks, other.blocks)])

    def __sub__(self, other: "BlockVector") -> "BlockVector":
        return BlockVector([a - b for a, b in zip(self.blocks, other.blocks)])

    def __mul__(self, scalar: float) -> "BlockVector":
        return BlockVector([scalar * b for b in self.blocks])

    __rmul__ = __mul__


def group_soft_threshold(a: np.ndarray, t: float) -> np.ndarray:
    """Shrink the euclidean norm of ``a`` by ``t``: (||a|| - t)+ * a/||a||.

    Returns the zero vector whenever ``||a|| <= t``, which also resolves
    the 0/0 at ``a = 0``. Exact minimizer of ``0.5*||x - a||^2 + t*||x||_2``.
    """
    a = np.asarray(a, dtype=float)
    nrm = np.linalg.norm(a)
    if nrm <= t:
        return np.zeros_like(a)
    return (1.0 - t / nrm) * a


def hard_threshold(u, t):
    """Keep entries with ``|u| > t``, zero the rest (ties go to zero).

    Works on scalars and arrays; ``t`` may be a scalar or a per-entry array.
    """
    u = np.asarray(u, dtype=float)
    out = np.where(np.abs(u) > t, u, 0.0)
    return float(out) if out.ndim == 0 else out


def gather(z: np.ndarray, gs: GroupStructure) -> BlockVector:
    """Copy the global vector into per-group blocks: block i is z[groups[i]]."""
    z = np.asarray(z, dtype=float)
    if z.size != gs.n:
        raise ValueError(f"expected a vector of length {gs.n}, got {z.size}")
    return BlockVector([z[g] for g in gs.groups])


def scatter_add(bv: BlockVector, gs: GroupStructure) -> np.ndarray:
    """Sum block entries back onto their global indices.

    Adjoint of :func:`gather`; ``scatter_add(gather(z)) == overlap_counts * z``.
    """
    out = np.zeros(gs.n)
    if len(bv):
        np.add.at(out, gs.flat_index, bv.concat())
    return out


def group_norm_sum(x: np.ndarray, gs: GroupStructure) -> float:
    """Sum of the per-group euclidean norms of ``x`` (unit weights)."""
    return float(sum(np.linalg.norm(x[g]) for g in gs.groups))


def weighted_group_norm(x: np.ndarray, gs: GroupStructure) -> float:
    """Weighted sum of per-group euclidean norms used by the bound problems."""
    return float(
        sum(w * np.linalg.norm(x[g]) for w, g in zip(gs.weights, gs.groups))
    )


def objective_value(x: np.ndarray, inst: ProxInstance, gs: GroupStructure) -> float:
    """Evaluate the composite objective

    ``(1/2s)*||x - v||^2 + lam0*nnz(x) + lam1*sum_i ||x_{G_i}||_2``.

    The group term is unweighted here; the weighted variant feeding the
    bound problems is :func:`weighted_group_norm`.
    """
    x = np.asarray(x, dtype=float)
    quad = 0.5 / inst.s * float(np.sum((x - inst.v) ** 2))
    nnz = int(np.count_nonzero(x))
    return quad + inst.lam0 * nnz + inst.lam1 * group_norm_sum(x, gs)

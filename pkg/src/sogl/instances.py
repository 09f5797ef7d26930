"""Instance files, run records, canonical serialization, and a generator.

Instance files are JSON objects with a fixed field set; unknown fields are
rejected so typos fail loudly. All numbers are emitted with 17 significant
digits, which round-trips float64 bit-exactly and keeps output byte-stable
across runs.
"""
from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .model import GroupStructure, ProxInstance

__all__ = [
    "ParseError",
    "ValidationError",
    "InstanceFile",
    "RunRecord",
    "parse_instance",
    "parse_instance_text",
    "instance_from_dict",
    "generate_instance",
    "dumps_canonical",
    "write_atomic",
    "trace_to_csv",
]

_FIELDS = {"v", "groups", "weights", "s", "lambda0", "lambda1", "lambda",
           "name", "seed"}
_REQUIRED = ("v", "groups", "s", "lambda0", "lambda1", "lambda")


class ParseError(ValueError):
    """The file is not valid JSON or not an object at the top level."""


class ValidationError(ValueError):
    """A field violates the schema; the message names the field."""


@dataclass
class InstanceFile:
    """In-memory form of one instance file."""

    v: list
    groups: list
    s: float
    lambda0: float
    lambda1: float
    lambda_: float
    weights: list = None
    name: str = None
    seed: int = None

    def to_dict(self) -> dict:
        d = {
            "v": list(self.v),
            "groups": [list(map(int, g)) for g in self.groups],
            "s": self.s,
            "lambda0": self.lambda0,
            "lambda1": self.lambda1,
            "lambda": self.lambda_,
        }
        if self.weights is not None:
            d["weights"] = list(self.weights)
        if self.name is not None:
            d["name"] = self.name
        if self.seed is not None:
            d["seed"] = self.seed
        return d

    def build(self):
        """Construct the validated (ProxInstance, GroupStructure) pair."""
        gs = GroupStructure(n=len(self.v), groups=self.groups,
                            weights=self.weights)
        inst = ProxInstance(v=np.asarray(self.v, dtype=float), s=self.s,
                            lam0=self.lambda0, lam1=self.lambda1,
                            lam=self.lambda_)
        return inst, gs


def _require_number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{where}: expected a number")
    return float(value)


def instance_from_dict(data: dict) -> InstanceFile:
    """Validate a decoded JSON object against the instance schema."""
    if not isinstance(data, dict):
        raise ParseError("instance file must be a JSON object")
    for key in data:
        if key not in _FIELDS:
            raise ValidationError(f"unknown field {key!r}")
    for key in _REQUIRED:
        if key not in data:
            raise ValidationError(f"{key}: missing required field")

    v = data["v"]
    if not isinstance(v, list) or not v:
        raise ValidationError("v: expected a non-empty array of numbers")
    v = [_require_number(x, f"v[{i}]") for i, x in enumerate(v)]
    n = len(v)

    groups = data["groups"]
    if not isinstance(groups, list):
        raise ValidationError("groups: expected an array of arrays")
    clean_groups = []
    for i, g in enumerate(groups):
        if not isinstance(g, list):
            raise ValidationError(f"groups[{i}]: expected an array of indices")
        if not g:
            raise ValidationError(f"groups[{i}]: group is empty")
        seen = set()
        for j, idx in enumerate(g):
            if isinstance(idx, bool) or not isinstance(idx, int):
                raise ValidationError(f"groups[{i}][{j}]: expected an integer index")
            if idx < 0 or idx >= n:
                raise ValidationError(
                    f"groups[{i}][{j}]: index {idx} out of range for n={n}"
                )
            if idx in seen:
                raise ValidationError(f"groups[{i}][{j}]: repeated index {idx}")
            seen.add(idx)
        clean_groups.append(list(g))

    weights = data.get("weights")
    if weights is not None:
        if not isinstance(weights, list):
            raise ValidationError("weights: expected an array of numbers")
        if len(weights) != len(clean_groups):
            raise ValidationError(
                f"weights: expected {len(clean_groups)} entries, got {len(weights)}"
            )
        weights = [_require_number(w, f"weights[{i}]") for i, w in enumerate(weights)]
        for i, w in enumerate(weights):
            if not w > 0:
                raise ValidationError(f"weights[{i}]: must be strictly positive")

    s = _require_number(data["s"], "s")
    if not s > 0:
        raise ValidationError("s: must be positive")
    lambdas = {}
    for key in ("lambda0", "lambda1", "lambda"):
        val = _require_number(data[key], key)
        if val < 0:
            raise ValidationError(f"{key}: must be nonnegative")
        lambdas[key] = val

    name = data.get("name")
    if name is not None and not isinstance(name, str):
        raise ValidationError("name: expected a string")
    seed = data.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
        raise ValidationError("seed: expected an integer")

    return InstanceFile(v=v, groups=clean_groups, s=s,
                        lambda0=lambdas["lambda0"], lambda1=lambdas["lambda1"],
                        lambda_=lambdas["lambda"], weights=weights,
                        name=name, seed=seed)


def parse_instance_text(text: str):
    """Parse instance JSON text into (ProxInstance, GroupStructure, InstanceFile)."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    instf = instance_from_dict(data)
    inst, gs = instf.build()
    return inst, gs, instf


def parse_instance(path: str):
    """Read and validate one instance file.

    Returns ``(ProxInstance, GroupStructure, InstanceFile)``.

    Raises
    ------
    ParseError
        On unreadable or malformed JSON.
    ValidationError
        On any schema or invariant violation; the message names the field.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    return parse_instance_text(text)


def generate_instance(seed: int, n: int, m: int,
                      group_size_range=(2, 4), overlap_mode: str = "chain",
                      s: float = 1.0, lambda0: float = 0.05,
                      lambda1: float = 0.1, lambda_: float = 0.1) -> InstanceFile:
    """Draw a random instance, deterministically from the seed.

    Modes: ``chain`` places consecutive windows that advance by half their
    width (wrapping to the front when they run off the end), ``random``
    samples uniform index subsets, ``nested`` produces an increasing chain
    of subsets of one shuffled index pool.
    """
    if n < 1 or m < 1:
        raise ValueError("n and m must be >= 1")
    if overlap_mode not in ("chain", "random", "nested"):
        raise ValueError(f"unknown overlap_mode {overlap_mode!r}")
    lo, hi = group_size_range
    lo = max(1, min(int(lo), n))
    hi = max(lo, min(int(hi), n))
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    sizes = rng.integers(lo, hi + 1, size=m)
    groups = []
    if overlap_mode == "chain":
        start = 0
        for size in sizes:
            size = int(size)
            if start + size > n:
                start = 0
            groups.append(list(range(start, start + size)))
            start += max(1, size - size // 2)
    elif overlap_mode == "random":
        for size in sizes:
            groups.append(sorted(int(i) for i in rng.choice(n, int(size), replace=False)))
    else:
        sizes = np.sort(sizes)
        pool = rng.permutation(n)
        for size in sizes:
            groups.append(sorted(int(i) for i in pool[: int(size)]))
    return InstanceFile(
        v=[float(x) for x in v],
        groups=groups,
        s=float(s),
        lambda0=float(lambda0),
        lambda1=float(lambda1),
        lambda_=float(lambda_),
        weights=[1.0] * m,
        name=f"{overlap_mode}-n{n}-m{m}-seed{seed}",
        seed=int(seed),
    )


@dataclass
class RunRecord:
    """One CLI run: which instance, which algorithm, config echo, report."""

    instance: str
    algorithm: str
    config: dict
    report: dict
    timestamp: str = None
    seed: int = None

    def to_dict(self) -> dict:
        return {
            "instance": self.instance,
            "algorithm": self.algorithm,
            "config": self.config,
            "report": self.report,
            "timestamp": self.timestamp,
            "seed": self.seed,
        }


def _fmt_float(x: float) -> str:
    if x != x or x in (float("inf"), float("-inf")):
        raise ValueError(f"cannot serialize non-finite number {x}")
    return format(x, ".17g")


def _emit(obj, out: list):
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, (int, np.integer)) and not isinstance(obj, bool):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_fmt_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        out.append("{")
        for i, (k, val) in enumerate(obj.items()):
            if i:
                out.append(", ")
            out.append(json.dumps(str(k)))
            out.append(": ")
            _emit(val, out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        seq = obj.tolist() if isinstance(obj, np.ndarray) else obj
        out.append("[")
        for i, val in enumerate(seq):
            if i:
                out.append(", ")
            _emit(val, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_canonical(obj) -> str:
    """Deterministic JSON text: 17-significant-digit floats, fixed spacing."""
    out = []
    _emit(obj, out)
    out.append("\n")
    return "".join(out)


def write_atomic(path: str, text: str):
    """Write via a temp file and rename, so readers never see partial output."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def trace_to_csv(trace) -> str:
    """Render solver trace rows as CSV with a fixed header."""
    lines = ["iter,objective,r_norm,s_norm"]
    for it, obj, r, s in trace or []:
        lines.append(f"{int(it)},{_fmt_float(obj)},{_fmt_float(r)},{_fmt_float(s)}")
    return "\n".join(lines) + "\n"

"""The 25-function benchmark suite and user-defined objectives.

Each benchmark maps a position ``x`` to ``z`` (shift, scale, optional
rotation or hybrid split), evaluates a base function on ``z`` and floors the
result at 1e-8. Shift vectors and rotation matrices are generated from a
seed, or loaded from the text format handled by :func:`save_transform_data`
and :func:`load_transform_data`.

Base functions are vectorized: they take ``z`` with shape ``(k, n)`` and
return shape ``(k,)``.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .core import ConfigurationError, SearchSpace
from .rng import RngStream

__all__ = [
    "BENCHMARKS",
    "FITNESS_FLOOR",
    "SCHWEFEL_OPTIMUM",
    "TransformChain",
    "ObjectiveSpec",
    "UserObjective",
    "TransformDataError",
    "parse_function_id",
    "hybrid_split",
    "generate_transform_data",
    "save_transform_data",
    "load_transform_data",
    "make_benchmark",
    "unshifted_benchmark",
    "register",
    "get_objective",
    "optimum",
]

FITNESS_FLOOR = 1e-8
# Minimizer of -z*sin(sqrt|z|) on [-500, 500].
SCHWEFEL_OPTIMUM = 420.96874635998203
LUNACEK_MU1 = 2.5
LUNACEK_D = 1.0


def _pi2(z):
    return 2.0 * np.pi * z


def sphere(z):
    return np.sum(z * z, axis=-1)


def schwefel_222(z):
    a = np.abs(z)
    if z.shape[-1] == 0:
        return np.zeros(z.shape[:-1])
    return a.sum(axis=-1) + a.prod(axis=-1)


def cigar(z):
    if z.shape[-1] == 0:
        return np.zeros(z.shape[:-1])
    return z[..., 0] ** 2 + 1e6 * np.sum(z[..., 1:] ** 2, axis=-1)


def discus(z):
    if z.shape[-1] == 0:
        return np.zeros(z.shape[:-1])
    return 1e6 * z[..., 0] ** 2 + np.sum(z[..., 1:] ** 2, axis=-1)


def quartic(z):
    """Noise-free part of the noisy quartic."""
    i = np.arange(1, z.shape[-1] + 1)
    return np.sum(i * z**4, axis=-1)


def rastrigin(z):
    return np.sum(z * z - 10.0 * np.cos(_pi2(z)) + 10.0, axis=-1)


def ackley(z):
    n = z.shape[-1]
    if n == 0:
        return np.zeros(z.shape[:-1])
    a = -20.0 * np.exp(-0.2 * np.sqrt(np.sum(z * z, axis=-1) / n))
    b = -np.exp(np.sum(np.cos(_pi2(z)), axis=-1) / n)
    return a + b + 20.0 + np.e


def griewank(z):
    n = z.shape[-1]
    if n == 0:
        return np.zeros(z.shape[:-1])
    i = np.sqrt(np.arange(1, n + 1))
    return np.sum(z * z, axis=-1) / 4000.0 - np.prod(np.cos(z / i), axis=-1) + 1.0


def rosenbrock(z):
    a = z[..., :-1]
    b = z[..., 1:]
    return np.sum(100.0 * (b - a * a) ** 2 + (a - 1.0) ** 2, axis=-1)


def levy(z):
    # The inner sine lacks the usual pi factor, as printed in the source table.
    if z.shape[-1] == 0:
        return np.zeros(z.shape[:-1])
    y = 1.0 + (z + 1.0) / 4.0
    head = np.sin(np.pi * y[..., 0]) ** 2
    body = np.sum((y[..., :-1] - 1.0) ** 2 * (1.0 + 10.0 * np.sin(y[..., 1:]) ** 2), axis=-1)
    tail = (y[..., -1] - 1.0) ** 2 * (1.0 + np.sin(_pi2(y[..., -1])) ** 2)
    return head + body + tail


def _penalty(z, a, k, m):
    return np.where(z > a, k * (z - a) ** m, np.where(z < -a, k * (-z - a) ** m, 0.0))


def penalized(z):
    if z.shape[-1] == 0:
        return np.zeros(z.shape[:-1])
    head = np.sin(3.0 * np.pi * z[..., 0]) ** 2
    body = np.sum((z[..., :-1] - 1.0) ** 2 * (1.0 + np.sin(3.0 * np.pi * z[..., 1:]) ** 2), axis=-1)
    tail = (z[..., -1] - 1.0) ** 2 * (1.0 + np.sin(_pi2(z[..., -1])) ** 2)
    return 0.1 * (head + body + tail) + np.sum(_penalty(z, 5.0, 100.0, 4), axis=-1)


def schaffer_f6(z):
    if z.shape[-1] == 0:
        return np.zeros(z.shape[:-1])
    r2 = z**2 + np.roll(z, -1, axis=-1) ** 2
    g = 0.5 + (np.sin(np.sqrt(r2)) ** 2 - 0.5) / (1.0 + 0.001 * r2) ** 2
    return np.sum(g, axis=-1)


def schwefel_226(z):
    n = z.shape[-1]
    return 418.9828872724338 * n - np.sum(z * np.sin(np.sqrt(np.abs(z))), axis=-1)


def schaffer_f7(z):
    n = z.shape[-1]
    if n < 2:
        return np.zeros(z.shape[:-1])
    y = np.sqrt(z[..., :-1] ** 2 + z[..., 1:] ** 2)
    sy = np.sqrt(y)
    return (np.sum(sy + np.sin(50.0 * y**0.2) * sy, axis=-1) / (n - 1)) ** 2


def lunacek_s(n: int) -> float:
    return 1.0 - 1.0 / (2.0 * math.sqrt(n) - 8.2)


def lunacek(z):
    n = z.shape[-1]
    if n == 0:
        return np.zeros(z.shape[:-1])
    s = lunacek_s(n)
    if s <= 0:
        raise ConfigurationError(f"Lunacek function undefined for block dimension {n} (s={s:.4g} <= 0)")
    mu2 = -math.sqrt((LUNACEK_MU1**2 - 1.0) / s)
    a = np.sum((z - LUNACEK_MU1) ** 2, axis=-1)
    b = LUNACEK_D * n + s * np.sum((z - mu2) ** 2, axis=-1)
    return np.minimum(a, b) + 10.0 * np.sum(1.0 - np.cos(_pi2(z - LUNACEK_MU1)), axis=-1)


@dataclass(frozen=True)
class _Base:
    name: str
    fn: Callable
    factor: float  # z = (x - o) * factor
    optimum: float  # every coordinate of the base minimizer


# Ids 1-15 are the base functions; everything else is built from them.
_BASE = {
    1: _Base("Sphere", sphere, 1.0, 0.0),
    2: _Base("Schwefel 2.22", schwefel_222, 0.1, 0.0),
    3: _Base("Cigar", cigar, 1.0, 0.0),
    4: _Base("Discus", discus, 1.0, 0.0),
    5: _Base("Quartic with noise", quartic, 0.0128, 0.0),
    6: _Base("Rastrigin", rastrigin, 0.0512, 0.0),
    7: _Base("Ackley", ackley, 0.32, 0.0),
    8: _Base("Griewank", griewank, 6.0, 0.0),
    9: _Base("Rosenbrock", rosenbrock, 0.3, 1.0),
    10: _Base("Levy", levy, 0.5, -1.0),
    11: _Base("Penalized", penalized, 0.5, 1.0),
    12: _Base("Schaffer F6", schaffer_f6, 1.0, 0.0),
    13: _Base("Schwefel 2.26", schwefel_226, 5.0, SCHWEFEL_OPTIMUM),
    14: _Base("Schaffer F7", schaffer_f7, 1.0, 0.0),
    15: _Base("Lunacek", lunacek, 0.1, LUNACEK_MU1),
}

_ROTATED = {16: 8, 17: 9, 18: 11, 19: 12, 20: 15}

_HYBRID = {
    21: (1, 6, 13),
    22: (6, 8, 9),
    23: (3, 7, 9, 11),
    24: (6, 7, 8, 9, 13),
    25: (1, 7, 10, 13, 15),
}

# Functions whose coordinates are used without a shift.
_UNSHIFTED = {13}


def _name(fid: int) -> str:
    if fid in _BASE:
        return _BASE[fid].name
    if fid in _ROTATED:
        return "Rotated " + _BASE[_ROTATED[fid]].name
    return f"Hybrid Function {fid - 20}"


BENCHMARKS = {fid: _name(fid) for fid in range(1, 26)}
GROUPS = {"I": range(1, 6), "II": range(6, 16), "III": range(16, 21), "IV": range(21, 26)}


def parse_function_id(fid: Union[int, str]) -> int:
    """Accept ``6``, ``"6"``, ``"f6"`` or ``"F6"``."""
    if isinstance(fid, str):
        s = fid.strip().lower()
        s = s[1:] if s.startswith("f") else s
        try:
            fid = int(s)
        except ValueError:
            raise ConfigurationError(f"unknown benchmark id {fid!r}") from None
    if fid not in BENCHMARKS:
        raise ConfigurationError(f"unknown benchmark id f{fid}")
    return int(fid)


def hybrid_split(fid: int, n: int) -> tuple:
    """Contiguous near-equal blocks; earlier blocks take the remainder.

    >>> hybrid_split(21, 10)
    ((1, 4), (6, 3), (13, 3))
    """
    subs = _HYBRID[fid]
    q, r = divmod(n, len(subs))
    return tuple((s, q + (1 if i < r else 0)) for i, s in enumerate(subs))


@dataclass(frozen=True)
class TransformChain:
    """Shift, scale, rotation and hybrid split applied before the base function.

    `scale` is the multiplicative factor (``5.12/100`` for Rastrigin). For
    hybrid functions it is None and every block uses its own sub-function's
    factor.
    """

    shift: Optional[np.ndarray] = None
    scale: Optional[float] = 1.0
    rotation: Optional[np.ndarray] = None
    split: Optional[tuple] = None

    def __eq__(self, other):
        if not isinstance(other, TransformChain):
            return NotImplemented
        return (
            _arr_eq(self.shift, other.shift)
            and self.scale == other.scale
            and _arr_eq(self.rotation, other.rotation)
            and self.split == other.split
        )

    __hash__ = None


def _arr_eq(a, b):
    if a is None or b is None:
        return a is None and b is None
    return a.shape == b.shape and bool(np.array_equal(a, b))


def _readonly(a):
    if a is None:
        return None
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


def _chain_for(fid: int, n: int, shift, rotation) -> TransformChain:
    if fid in _HYBRID:
        return TransformChain(shift=_readonly(shift), scale=None, rotation=None, split=hybrid_split(fid, n))
    base = _ROTATED.get(fid, fid)
    return TransformChain(
        shift=_readonly(shift),
        scale=_BASE[base].factor,
        rotation=_readonly(rotation) if fid in _ROTATED else None,
    )


def _optimum_z(fid: int, n: int) -> np.ndarray:
    return np.full(n, _BASE[fid].optimum)


def _shift_offset(fid: int, n: int, rotation) -> np.ndarray:
    """``x* - o``: where the minimizer sits relative to the shift vector."""
    if fid in _HYBRID:
        parts = []
        for sub, size in hybrid_split(fid, n):
            if sub in _UNSHIFTED:
                parts.append(np.zeros(size))
            else:
                parts.append(_optimum_z(sub, size) / _BASE[sub].factor)
        return np.concatenate(parts) if parts else np.zeros(0)
    base = _ROTATED.get(fid, fid)
    z = _optimum_z(base, n)
    if fid in _ROTATED:
        z = rotation.T @ z
    return z / _BASE[base].factor


def random_rotation(n: int, rng: np.random.Generator) -> np.ndarray:
    """Orthogonal factor of the QR decomposition of a standard-normal matrix.

    Columns are sign-normalized so the triangular factor has a positive
    diagonal, which makes the result unique for a given draw.
    """
    a = rng.standard_normal((n, n))
    q, r = np.linalg.qr(a)
    q = q * np.where(np.diag(r) < 0, -1.0, 1.0)
    resid = np.max(np.abs(q.T @ q - np.eye(n)))
    if resid >= 1e-10:
        raise ArithmeticError(f"rotation not orthogonal (residual {resid:.3g})")
    return q


def generate_transform_data(fid, n: int, seed: int = 0) -> TransformChain:
    """Deterministic shift and rotation for benchmark `fid` in dimension `n`.

    The shift is chosen so that the shifted minimizer lands uniformly in
    ``[-80, 80]^n``. Schwefel 2.26 (f13) is left unshifted.
    """
    fid = parse_function_id(fid)
    if n < 1:
        raise ConfigurationError(f"dimension must be >= 1, got {n}")
    rot_seq, shift_seq = np.random.SeedSequence([int(seed), fid, int(n)]).spawn(2)
    rotation = random_rotation(n, np.random.default_rng(rot_seq)) if fid in _ROTATED else None
    if fid in _UNSHIFTED:
        shift = None
    else:
        where = np.random.default_rng(shift_seq).uniform(-80.0, 80.0, n)
        shift = where - _shift_offset(fid, n, rotation)
    return _chain_for(fid, n, shift, rotation)


class TransformDataError(ConfigurationError):
    pass


_HEADER = "ssa-transform"
_VERSION = "v1"


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def save_transform_data(path, fid, chain: TransformChain, n: Optional[int] = None) -> None:
    """Write `chain` in the versioned text format.

    `n` is only needed when the chain carries neither shift nor rotation.
    """
    fid = parse_function_id(fid)
    dim = _chain_dim(chain)
    if dim is None and n is None:
        raise TransformDataError("chain carries neither shift nor rotation; pass n")
    if dim is not None and n is not None and dim != n:
        raise TransformDataError(f"chain dimension {dim} does not match n={n}")
    n = dim if dim is not None else n
    lines = [f"{_HEADER} {_VERSION} f{fid} {n}"]
    lines.append("none" if chain.shift is None else " ".join(_fmt(v) for v in chain.shift))
    if chain.rotation is None:
        lines.append("none")
    else:
        lines.extend(" ".join(_fmt(v) for v in row) for row in chain.rotation)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _chain_dim(chain):
    if chain.shift is not None:
        return chain.shift.size
    if chain.rotation is not None:
        return chain.rotation.shape[0]
    return None


def _parse_row(text, n, lineno, what):
    try:
        row = [float(tok) for tok in text.split()]
    except ValueError as exc:
        raise TransformDataError(f"line {lineno}: bad number in {what} ({exc})") from None
    if len(row) != n:
        raise TransformDataError(f"line {lineno}: {what} has {len(row)} values, expected {n}")
    return row


def load_transform_data(path):
    """Read a transform data file.

    Returns
    -------
    (fid, n, TransformChain)
    """
    with open(path, encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh.read().splitlines()]
    while lines and not lines[-1]:
        lines.pop()
    if not lines:
        raise TransformDataError("line 1: empty file")
    head = lines[0].split()
    if len(head) != 4 or head[0] != _HEADER or head[1] != _VERSION:
        raise TransformDataError(f"line 1: expected '{_HEADER} {_VERSION} <function-id> <n>', got {lines[0]!r}")
    try:
        fid = parse_function_id(head[2])
        n = int(head[3])
    except (ConfigurationError, ValueError) as exc:
        raise TransformDataError(f"line 1: {exc}") from None
    if n < 1:
        raise TransformDataError(f"line 1: dimension must be >= 1, got {n}")
    if len(lines) < 3:
        raise TransformDataError(f"line {len(lines) + 1}: file ends before the rotation section")

    shift = None if lines[1] == "none" else np.array(_parse_row(lines[1], n, 2, "shift vector"))
    if lines[2] == "none":
        rotation = None
        if len(lines) > 3:
            raise TransformDataError(f"line 4: unexpected content after 'none' rotation")
    else:
        rows = lines[2:]
        if len(rows) != n:
            raise TransformDataError(f"line {2 + len(rows) + (len(rows) < n)}: rotation has {len(rows)} rows, expected {n}")
        rotation = np.array([_parse_row(r, n, i + 3, f"rotation row {i + 1}") for i, r in enumerate(rows)])
    return fid, n, _chain_for(fid, n, shift, rotation)


class ObjectiveSpec:
    """One benchmark function bound to its dimension and transform data.

    Parameters
    ----------
    fid : int
        Benchmark id, 1..25.
    n : int
        Dimension.
    chain : TransformChain
    space : SearchSpace, optional
        Defaults to ``[-100, 100]^n``.
    floor : float
        Values below the floor are reported as the floor.
    """

    def __init__(self, fid, n: int, chain: TransformChain, space: Optional[SearchSpace] = None,
                 floor: float = FITNESS_FLOOR):
        self.fid = parse_function_id(fid)
        self.n = int(n)
        self.name = BENCHMARKS[self.fid]
        self.space = SearchSpace.box(self.n) if space is None else space
        self.floor = floor
        self.noisy = self.fid == 5
        self.chain = chain
        self._validate()

    @property
    def id(self) -> str:
        return f"f{self.fid}"

    def _validate(self):
        fid, n, ch = self.fid, self.n, self.chain
        if self.space.n != n:
            raise ConfigurationError(f"search space has {self.space.n} dimensions, expected {n}")
        needs_shift = fid not in _UNSHIFTED
        if needs_shift and ch.shift is None:
            raise ConfigurationError(f"f{fid} needs a shift vector")
        if ch.shift is not None and ch.shift.shape != (n,):
            raise ConfigurationError(f"f{fid}: shift has shape {ch.shift.shape}, expected ({n},)")
        if fid in _ROTATED:
            if ch.rotation is None:
                raise ConfigurationError(f"f{fid} is rotated and needs a rotation matrix")
            if ch.rotation.shape != (n, n):
                raise ConfigurationError(f"f{fid}: rotation has shape {ch.rotation.shape}, expected ({n}, {n})")
        if fid in _HYBRID:
            if ch.split is None or sum(s for _, s in ch.split) != n:
                raise ConfigurationError(f"f{fid}: hybrid split must cover all {n} dimensions")
        if fid == 14 and n < 2:
            raise ConfigurationError("f14 needs at least 2 dimensions")
        for sub, size in self._blocks():
            if _BASE[sub].fn is lunacek and size and lunacek_s(size) <= 0:
                raise ConfigurationError(
                    f"f{fid}: Lunacek term undefined for {size} dimensions (s <= 0 for 17..21)"
                )

    def _blocks(self):
        if self.fid in _HYBRID:
            return self.chain.split
        return ((_ROTATED.get(self.fid, self.fid), self.n),)

    def transform(self, X) -> np.ndarray:
        """``z`` for non-hybrid functions (rotation applied)."""
        if self.fid in _HYBRID:
            raise ValueError("hybrid functions transform block-wise")
        X = np.asarray(X, dtype=float)
        ch = self.chain
        z = X - ch.shift if ch.shift is not None else X
        z = z * ch.scale
        if ch.rotation is not None:
            z = z @ ch.rotation.T
        return z

    def raw_batch(self, X, rng: Optional[RngStream] = None, noise: bool = True) -> np.ndarray:
        """Unfloored values for each row of `X`.

        The noisy quartic draws one uniform per row from `rng`; pass
        ``noise=False`` to get its deterministic part.
        """
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[-1] != self.n:
            raise ConfigurationError(f"{self.id}: got points of dimension {X.shape[-1]}, expected {self.n}")
        if self.fid in _HYBRID:
            out = np.zeros(X.shape[0])
            start = 0
            for sub, size in self.chain.split:
                block = X[:, start:start + size]
                if sub not in _UNSHIFTED:
                    block = block - self.chain.shift[start:start + size]
                out += _BASE[sub].fn(block * _BASE[sub].factor)
                start += size
            return out
        base = _ROTATED.get(self.fid, self.fid)
        out = _BASE[base].fn(self.transform(X))
        if self.noisy and noise:
            if rng is None:
                raise ValueError("f5 is noisy; pass an RngStream or noise=False")
            out = out + rng.random_open(X.shape[0])
        return out

    def evaluate_batch(self, X, rng: Optional[RngStream] = None) -> np.ndarray:
        return np.maximum(self.raw_batch(X, rng), self.floor)

    def evaluate(self, x, rng: Optional[RngStream] = None) -> float:
        return float(self.evaluate_batch(np.asarray(x, dtype=float)[None, :], rng)[0])

    __call__ = evaluate

    def __repr__(self):
        return f"ObjectiveSpec({self.id} {self.name!r}, n={self.n})"


def optimum(spec: ObjectiveSpec) -> np.ndarray:
    """Analytic minimizer of a benchmark in ``x`` coordinates."""
    fid, n, ch = spec.fid, spec.n, spec.chain
    if fid in _HYBRID:
        parts, start = [], 0
        for sub, size in ch.split:
            z = _optimum_z(sub, size) / _BASE[sub].factor
            if sub not in _UNSHIFTED:
                z = z + ch.shift[start:start + size]
            parts.append(z)
            start += size
        return np.concatenate(parts)
    offset = _shift_offset(fid, n, ch.rotation)
    return offset if ch.shift is None else ch.shift + offset


class UserObjective:
    """Wrap a plain ``f(x) -> float`` callable for the engine."""

    def __init__(self, name: str, func: Callable, space: SearchSpace, floor: Optional[float] = None):
        self.name = name
        self.id = name
        self.func = func
        self.space = space
        self.n = space.n
        self.floor = floor
        self.noisy = False

    def evaluate_batch(self, X, rng=None) -> np.ndarray:
        vals = np.array([float(self.func(row)) for row in np.atleast_2d(X)])
        return vals if self.floor is None else np.maximum(vals, self.floor)

    def evaluate(self, x, rng=None) -> float:
        return float(self.evaluate_batch(np.asarray(x, dtype=float)[None, :])[0])

    __call__ = evaluate


_REGISTRY: dict = {}


def register(name: str, factory: Callable[[int], object]) -> None:
    """Register ``factory(n) -> objective`` under `name` for :func:`get_objective`."""
    key = name.strip().lower()
    if _looks_like_benchmark(key):
        raise ValueError(f"{name!r} collides with a benchmark id")
    _REGISTRY[key] = factory


def _looks_like_benchmark(key: str) -> bool:
    try:
        parse_function_id(key)
        return True
    except ConfigurationError:
        return False


def make_benchmark(fid, n: int, seed: int = 0, data_path=None) -> ObjectiveSpec:
    """Benchmark `fid` in dimension `n` with generated or loaded transform data."""
    fid = parse_function_id(fid)
    if data_path is None:
        return ObjectiveSpec(fid, n, generate_transform_data(fid, n, seed))
    file_fid, file_n, chain = load_transform_data(data_path)
    if (file_fid, file_n) != (fid, n):
        raise ConfigurationError(f"{data_path}: holds data for f{file_fid} n={file_n}, wanted f{fid} n={n}")
    return ObjectiveSpec(fid, n, chain)


def unshifted_benchmark(fid, n: int, seed: int = 0) -> ObjectiveSpec:
    """Benchmark with a zero shift vector (rotations still generated from `seed`)."""
    fid = parse_function_id(fid)
    rotation = generate_transform_data(fid, n, seed).rotation
    return ObjectiveSpec(fid, n, _chain_for(fid, n, np.zeros(n), rotation))


def find_data_file(fid: int, n: int, data_dir=None):
    """``<dir>/f<id>_n<n>.txt`` under `data_dir` or ``$SSA_DATA_DIR``, if it exists."""
    data_dir = data_dir or os.environ.get("SSA_DATA_DIR")
    if not data_dir:
        return None
    path = os.path.join(data_dir, f"f{fid}_n{n}.txt")
    return path if os.path.exists(path) else None


def get_objective(name, n: int, seed: int = 0, data_path=None):
    """Benchmark id or registered user objective."""
    key = str(name).strip().lower()
    if key in _REGISTRY:
        return _REGISTRY[key](n)
    fid = parse_function_id(name)
    if data_path is None:
        data_path = find_data_file(fid, n)
    return make_benchmark(fid, n, seed=seed, data_path=data_path)

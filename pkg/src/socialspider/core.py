"""Social Spider Algorithm engine.

Spiders are stored as a struct of arrays (one row per spider) so that one
iteration is a handful of numpy calls. The per-spider operations below all
accept either a single spider (1-D arrays) or a batch (2-D arrays with one
row per spider); the engine always calls them with the whole population.

Random draw order inside one iteration is fixed:

1. objective noise, one draw per spider in row order (noisy objectives only);
2. mask-change uniforms, one per spider;
3. fresh mask bits for the spiders that change, row-major;
4. repair indices for all-zero masks, then for all-one masks;
5. spider indices for every masked coordinate, row-major;
6. inertia factors, one per spider, then approach factors, row-major;
7. reflection factors for every violated coordinate, row-major.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Protocol

import numpy as np
from scipy.spatial.distance import cdist

from .rng import RngStream

__all__ = [
    "SsaError",
    "InvalidBaselineError",
    "ConfigurationError",
    "SearchSpace",
    "SsaParams",
    "Vibration",
    "SpiderState",
    "EngineState",
    "RunRecord",
    "SIGMA_EPS",
    "source_intensity",
    "manhattan_distance",
    "attenuate",
    "received_intensities",
    "select_target",
    "maybe_update_mask",
    "following_position",
    "random_walk",
    "reflect_into_bounds",
    "init_engine",
    "step",
    "run",
]

SIGMA_EPS = 1e-12


class SsaError(Exception):
    pass


class InvalidBaselineError(SsaError, ValueError):
    """A fitness value is not strictly above the intensity baseline C."""


class ConfigurationError(SsaError, ValueError):
    pass


@dataclass(frozen=True)
class SearchSpace:
    """Axis-aligned box ``lower <= x <= upper``."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.array(self.lower, dtype=float).reshape(-1)
        upper = np.array(self.upper, dtype=float).reshape(-1)
        if lower.shape != upper.shape:
            raise ConfigurationError("lower and upper bounds differ in length")
        if lower.size < 1:
            raise ConfigurationError("search space needs at least one dimension")
        if not np.all(lower < upper):
            raise ConfigurationError("every lower bound must be below its upper bound")
        lower.flags.writeable = False
        upper.flags.writeable = False
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def box(cls, n: int, low: float = -100.0, high: float = 100.0) -> "SearchSpace":
        if n < 1:
            raise ConfigurationError(f"dimension must be >= 1, got {n}")
        return cls(np.full(n, float(low)), np.full(n, float(high)))

    @property
    def n(self) -> int:
        return self.lower.size

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all((x >= self.lower) & (x <= self.upper)))

    def sample(self, rng: RngStream, count: int) -> np.ndarray:
        u = rng.random((count, self.n))
        return self.lower + u * (self.upper - self.lower)


class Objective(Protocol):
    space: SearchSpace

    def evaluate_batch(self, X: np.ndarray, rng: RngStream) -> np.ndarray: ...


@dataclass(frozen=True)
class SsaParams:
    """User-controlled knobs of one run.

    Parameters
    ----------
    r_a : float
        Attenuation rate; larger values attenuate less.
    p_c : float
        Base of the mask-change probability ``1 - p_c**c_s``.
    p_m : float
        Probability that a freshly drawn mask bit is one.
    pop_size : int
        Number of spiders.
    c : float
        Intensity baseline. Every fitness must be strictly greater.
    max_fe : int
        Function-evaluation budget.
    target : float, optional
        Stop as soon as the best fitness is at or below this value.
    seed : int
        Seed of the run's random stream.
    """

    r_a: float = 1.0
    p_c: float = 0.7
    p_m: float = 0.1
    pop_size: int = 10
    c: float = -1e-100
    max_fe: int = 100_000
    target: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if not self.r_a > 0:
            raise ConfigurationError(f"r_a must be > 0, got {self.r_a}")
        if not 0 < self.p_c < 1:
            raise ConfigurationError(f"p_c must lie in (0, 1), got {self.p_c}")
        if not 0 < self.p_m < 1:
            raise ConfigurationError(f"p_m must lie in (0, 1), got {self.p_m}")
        if int(self.pop_size) != self.pop_size or self.pop_size < 2:
            raise ConfigurationError(f"pop_size must be an integer >= 2, got {self.pop_size}")
        if int(self.max_fe) != self.max_fe or self.max_fe < 1:
            raise ConfigurationError(f"max_fe must be a positive integer, got {self.max_fe}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigurationError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if not math.isfinite(self.c):
            raise ConfigurationError("c must be finite")


@dataclass
class Vibration:
    position: np.ndarray
    intensity: float

    def __post_init__(self):
        if self.intensity < 0:
            raise ValueError(f"vibration intensity must be >= 0, got {self.intensity}")


@dataclass
class SpiderState:
    """Memory of one spider (a copy, detached from the engine)."""

    position: np.ndarray
    fitness: float
    target: Vibration
    inactive: int
    prev_move: np.ndarray
    mask: np.ndarray


@dataclass
class EngineState:
    positions: np.ndarray  # (pop, n)
    fitness: np.ndarray  # (pop,)
    target_pos: np.ndarray  # (pop, n)
    target_int: np.ndarray  # (pop,)
    inactive: np.ndarray  # (pop,) iterations since the target last changed
    prev_move: np.ndarray  # (pop, n)
    masks: np.ndarray  # (pop, n) bool
    t: int = 0
    fe: int = 0
    sigma: np.ndarray = field(default_factory=lambda: np.zeros(0))
    sigma_bar: float = 0.0
    best_x: Optional[np.ndarray] = None
    best_f: float = math.inf

    @property
    def pop_size(self) -> int:
        return self.positions.shape[0]

    def spider(self, i: int) -> SpiderState:
        return SpiderState(
            position=self.positions[i].copy(),
            fitness=float(self.fitness[i]),
            target=Vibration(self.target_pos[i].copy(), float(self.target_int[i])),
            inactive=int(self.inactive[i]),
            prev_move=self.prev_move[i].copy(),
            mask=self.masks[i].copy(),
        )

    def copy(self) -> "EngineState":
        return EngineState(
            positions=self.positions.copy(),
            fitness=self.fitness.copy(),
            target_pos=self.target_pos.copy(),
            target_int=self.target_int.copy(),
            inactive=self.inactive.copy(),
            prev_move=self.prev_move.copy(),
            masks=self.masks.copy(),
            t=self.t,
            fe=self.fe,
            sigma=self.sigma.copy(),
            sigma_bar=self.sigma_bar,
            best_x=None if self.best_x is None else self.best_x.copy(),
            best_f=self.best_f,
        )


@dataclass
class RunRecord:
    """Outcome of one run.

    `trace` holds ``(fe, best_so_far)`` pairs; the last pair always carries
    the final best.
    """

    seed: int
    best_f: float
    best_x: np.ndarray
    fe_used: int
    trace: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "best_f": self.best_f,
            "best_x": [float(v) for v in self.best_x],
            "fe_used": self.fe_used,
            "trace": [[int(fe), float(f)] for fe, f in self.trace],
        }


def source_intensity(fitness, c: float):
    """Intensity ``log(1/(f - c) + 1)`` of a vibration emitted at fitness `f`.

    Works on scalars and arrays. Raises :class:`InvalidBaselineError` when any
    fitness is not strictly above `c`.
    """
    f = np.asarray(fitness, dtype=float)
    gap = f - c
    if np.any(~(gap > 0)):
        worst = float(np.min(f)) if f.size else float("nan")
        raise InvalidBaselineError(
            f"fitness {worst!r} is not above the intensity baseline c={c!r}; choose a smaller c"
        )
    out = np.log1p(1.0 / gap)
    return float(out) if out.ndim == 0 else out


def manhattan_distance(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.abs(a - b).sum())


def _attenuation_scale(sigma_bar: float, r_a: float) -> float:
    return max(float(sigma_bar), SIGMA_EPS) * r_a


def attenuate(source: Vibration, receiver_position, sigma_bar: float, r_a: float) -> float:
    """Intensity of `source` as sensed at `receiver_position`."""
    d = manhattan_distance(source.position, receiver_position)
    return float(source.intensity * np.exp(-d / _attenuation_scale(sigma_bar, r_a)))


def received_intensities(positions, intensities, sigma_bar: float, r_a: float) -> np.ndarray:
    """Matrix of attenuated intensities, ``[receiver, source]``."""
    d = cdist(positions, positions, "cityblock")
    return intensities[None, :] * np.exp(-d / _attenuation_scale(sigma_bar, r_a))


def select_target(target_pos, target_int, inactive, source_pos, received):
    """Adopt the strongest received vibration if it beats the stored target.

    Parameters
    ----------
    target_pos, target_int, inactive
        Stored target source position(s), intensity(ies) and inactivity
        counter(s) of the receiving spider(s).
    source_pos : ndarray, shape (m, n)
        Source positions of the received vibrations.
    received : ndarray, shape (m,) or (k, m)
        Attenuated intensities at each receiver.

    Returns
    -------
    (target_pos, target_int, inactive)
        Updated copies. Ties keep the old target.
    """
    received = np.asarray(received, dtype=float)
    if received.shape[-1] == 0:
        raise ValueError("no vibrations received")
    best = np.argmax(received, axis=-1)
    if received.ndim == 1:
        best_int = received[best]
        if best_int > target_int:
            return np.array(source_pos[best], dtype=float), float(best_int), 0
        return np.array(target_pos, dtype=float), float(target_int), int(inactive) + 1
    best_int = received[np.arange(received.shape[0]), best]
    replace = best_int > target_int
    new_pos = np.where(replace[:, None], source_pos[best], target_pos)
    new_int = np.where(replace, best_int, target_int)
    new_inactive = np.where(replace, 0, inactive + 1)
    return new_pos, new_int, new_inactive


def maybe_update_mask(masks, inactive, p_c: float, p_m: float, rng: RngStream):
    """Resample dimension masks with probability ``1 - p_c**inactive``.

    A resampled mask that comes out all zeros gets one random bit set; one
    that comes out all ones gets one random bit cleared.
    """
    masks = np.array(masks, dtype=bool)
    single = masks.ndim == 1
    m2 = np.atleast_2d(masks)
    inactive = np.atleast_1d(np.asarray(inactive))
    k, n = m2.shape

    u = rng.random(k)
    change = u > np.power(p_c, inactive.astype(float))
    rows = np.flatnonzero(change)
    if rows.size:
        fresh = rng.random((rows.size, n)) < p_m
        zeros = rows[~fresh.any(axis=1)]
        ones = rows[fresh.all(axis=1)]
        m2[rows] = fresh
        if zeros.size:
            m2[zeros, rng.integers(n, zeros.size)] = True
        if ones.size:
            m2[ones, rng.integers(n, ones.size)] = False
    return m2[0] if single else m2


def following_position(masks, target_pos, positions, rng: RngStream) -> np.ndarray:
    """Coordinates from the target source where the mask is 0, else from a random spider.

    A fresh spider index (self included) is drawn for every masked coordinate.
    """
    masks = np.asarray(masks, dtype=bool)
    follow = np.array(target_pos, dtype=float)
    rows, cols = np.nonzero(np.atleast_2d(masks))
    if rows.size:
        idx = rng.integers(positions.shape[0], rows.size)
        picked = positions[idx, cols]
        if follow.ndim == 1:
            follow[cols] = picked
        else:
            follow[rows, cols] = picked
    return follow


def random_walk(positions, prev_move, follow, rng: RngStream) -> np.ndarray:
    """Proposed next position(s), before constraint handling.

    The inertia factor is one scalar per spider; the approach factors are
    independent per coordinate.
    """
    positions = np.asarray(positions, dtype=float)
    if positions.ndim == 1:
        r = rng.random()
        R = rng.random(positions.shape)
        return positions + prev_move * r + (follow - positions) * R
    k = positions.shape[0]
    r = rng.random(k)
    R = rng.random(positions.shape)
    return positions + prev_move * r[:, None] + (follow - positions) * R


def reflect_into_bounds(proposed, previous, space: SearchSpace, rng: RngStream) -> np.ndarray:
    """Map violated coordinates to a random point between the previous coordinate and the bound."""
    proposed = np.array(proposed, dtype=float)
    previous = np.asarray(previous, dtype=float)
    lo, hi = space.lower, space.upper
    if np.any(previous < lo) or np.any(previous > hi):
        raise ValueError("previous position is outside the search space")
    above = proposed > hi
    below = proposed < lo
    bad = above | below
    if not bad.any():
        return proposed
    lo_b = np.broadcast_to(lo, proposed.shape)
    hi_b = np.broadcast_to(hi, proposed.shape)
    r = rng.random_open(int(bad.sum()))
    # Row-major order over violated coordinates fixes the draw order.
    idx = np.nonzero(bad)
    prev_v = previous[idx]
    up = above[idx]
    proposed[idx] = np.where(
        up,
        hi_b[idx] - r * (hi_b[idx] - prev_v),
        lo_b[idx] + r * (prev_v - lo_b[idx]),
    )
    return proposed


def init_engine(objective: Objective, params: SsaParams, rng: RngStream) -> EngineState:
    """Uniform random positions; targets sit on the spiders with intensity zero.

    Fitness is left at +inf: the first iteration's evaluation pass scores the
    initial positions, so no evaluations are spent here.
    """
    space = objective.space
    k, n = int(params.pop_size), space.n
    pos = space.sample(rng, k)
    return EngineState(
        positions=pos,
        fitness=np.full(k, np.inf),
        target_pos=pos.copy(),
        target_int=np.zeros(k),
        inactive=np.zeros(k, dtype=np.int64),
        prev_move=np.zeros((k, n)),
        masks=np.zeros((k, n), dtype=bool),
        sigma=np.zeros(n),
    )


def step(engine: EngineState, objective: Objective, params: SsaParams, rng: RngStream) -> EngineState:
    """Advance `engine` by one iteration in place and return it."""
    pos = engine.positions
    fit = np.asarray(objective.evaluate_batch(pos, rng), dtype=float)
    if fit.shape != (engine.pop_size,):
        raise ValueError(f"objective returned shape {fit.shape}, expected ({engine.pop_size},)")
    engine.fitness = fit
    engine.fe += engine.pop_size
    i = int(np.argmin(fit))
    if fit[i] < engine.best_f:
        engine.best_f = float(fit[i])
        engine.best_x = pos[i].copy()

    intensity = source_intensity(fit, params.c)
    engine.sigma = pos.std(axis=0)
    engine.sigma_bar = float(engine.sigma.mean())

    received = received_intensities(pos, intensity, engine.sigma_bar, params.r_a)
    engine.target_pos, engine.target_int, engine.inactive = select_target(
        engine.target_pos, engine.target_int, engine.inactive, pos, received
    )
    engine.masks = maybe_update_mask(engine.masks, engine.inactive, params.p_c, params.p_m, rng)
    follow = following_position(engine.masks, engine.target_pos, pos, rng)
    proposed = random_walk(pos, engine.prev_move, follow, rng)
    new_pos = reflect_into_bounds(proposed, pos, objective.space, rng)
    engine.prev_move = new_pos - pos
    engine.positions = new_pos
    engine.t += 1
    return engine


def _default_stride(max_fe: int) -> int:
    return max(1, max_fe // 200)


def run(objective: Objective, params: SsaParams, trace_stride: Optional[int] = None) -> RunRecord:
    """Minimize `objective` from scratch under `params`.

    Iterates until the evaluation budget cannot cover another full iteration
    or the target fitness is reached. The trace samples the best-so-far
    fitness every `trace_stride` evaluations (default: budget / 200).
    """
    if params.max_fe < params.pop_size:
        raise ConfigurationError(
            f"budget {params.max_fe} is smaller than one iteration ({params.pop_size} evaluations)"
        )
    stride = _default_stride(params.max_fe) if trace_stride is None else int(trace_stride)
    if stride < 1:
        raise ConfigurationError("trace stride must be >= 1")

    rng = RngStream(params.seed)
    engine = init_engine(objective, params, rng)
    trace = []
    next_sample = stride
    while engine.fe + params.pop_size <= params.max_fe:
        step(engine, objective, params, rng)
        if engine.fe >= next_sample:
            trace.append((engine.fe, engine.best_f))
            next_sample = (engine.fe // stride + 1) * stride
        if params.target is not None and engine.best_f <= params.target:
            break
    if not trace or trace[-1][0] != engine.fe:
        trace.append((engine.fe, engine.best_f))
    return RunRecord(
        seed=params.seed,
        best_f=engine.best_f,
        best_x=engine.best_x,
        fe_used=engine.fe,
        trace=trace,
    )

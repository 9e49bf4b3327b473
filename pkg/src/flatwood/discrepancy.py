"""Partial-coloring vector balancing.

Given rows y_1..y_u in R^v, a start x0 in [-1,1]^v and slacks c_r >= 0
with sum_r exp(-(c_r/14)^2) <= v/16, find x in {-1,1}^v with

    |<x - x0, y_r>| <= (c_r + 30) sqrt(v) ||y_r||_inf   for every r.

:func:`solve` runs an iterated constrained Gaussian walk (the Lovett-Meka
edge walk): each phase moves x inside the cube and inside per-row slabs,
freezing coordinates that reach a face and rows that reach their slab, until
at least half of the free coordinates have saturated.  Randomness comes
from numpy's PCG64 generator seeded through SeedSequence, so a (instance,
seed) pair reproduces bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
import scipy.fft

from flatwood.trigcore import fft_workers

RNG_NAME = "numpy.random.PCG64 via SeedSequence(seed).spawn"
EXHAUSTIVE_MAX_V = 20


class EntropyError(ValueError):
    pass


class DenseConstraints:
    """Explicit u x v constraint matrix."""

    kind = "dense"

    def __init__(self, Y):
        Y = np.array(Y, dtype=np.float64, ndmin=2)
        Y.setflags(write=False)
        self.Y = Y

    @property
    def shape(self):
        return self.Y.shape

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.Y @ x

    def rows(self, idx) -> np.ndarray:
        return self.Y[np.asarray(idx, dtype=np.int64)]

    def dense(self) -> np.ndarray:
        return self.Y

    def row_inf_norms(self) -> np.ndarray:
        return np.abs(self.Y).max(axis=1) if self.Y.shape[1] else np.zeros(self.Y.shape[0])

    def to_dict(self) -> dict:
        return {"kind": self.kind, "rows": [[repr(float(a)) for a in r] for r in self.Y]}


class OddSineGrid:
    """Implicit rows y_{r,k} = sin((2k-1) t_r), t_r = (2r-1) pi/(4L), r <= L, k <= v.

    The product Y x is 0.5 * DST-IV of x zero-padded to length L.  Single
    entries use exact integer phases: (2k-1)(2r-1) is reduced mod 8L.
    """

    kind = "odd_sine_grid"

    def __init__(self, v: int, L: int):
        if v > L:
            raise ValueError("need v <= L")
        self.v = int(v)
        self.L = int(L)
        self._norms: Optional[np.ndarray] = None

    @property
    def shape(self):
        return (self.L, self.v)

    @property
    def t(self) -> np.ndarray:
        r = np.arange(1, self.L + 1)
        return (2 * r - 1) * math.pi / (4 * self.L)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        buf = np.zeros(self.L)
        buf[: self.v] = x
        return 0.5 * scipy.fft.dst(buf, type=4, workers=fft_workers())

    def _sin_phase(self, j: np.ndarray) -> np.ndarray:
        return np.sin(np.pi * (j % (8 * self.L)) / (4 * self.L))

    def rows(self, idx) -> np.ndarray:
        r = np.asarray(idx, dtype=np.int64) + 1
        k = np.arange(1, self.v + 1, dtype=np.int64)
        return self._sin_phase(np.multiply.outer(2 * r - 1, 2 * k - 1))

    def dense(self) -> np.ndarray:
        return self.rows(np.arange(self.L))

    def row_inf_norms(self) -> np.ndarray:
        """Exact max_k |sin((2k-1) t_r)| for every row.

        |sin(pi j/(4L))| = cos(pi d/(4L)) where d is the distance of j mod 4L
        from 2L.  For d = 1, 3, 5, ... the congruence (2k-1)(2r-1) = 2L +- d
        (mod 4L) is solved directly; the first d whose smallest solution
        satisfies 2k-1 <= 2v-1 gives the row maximum.  Rows still open after
        a fixed number of d's are scanned directly.
        """
        if self._norms is not None:
            return self._norms
        L, v = self.L, self.v
        m = 4 * L
        a = 2 * np.arange(1, L + 1, dtype=np.int64) - 1
        g = np.gcd(a, m)
        mod = m // g
        inv = np.array([pow(int(ai // gi), -1, int(mi)) if mi > 1 else 0
                        for ai, gi, mi in zip(a, g, mod)], dtype=np.int64)
        best = np.full(L, -1, dtype=np.int64)
        open_ = np.ones(L, dtype=bool)
        limit = 2 * v - 1
        for d in range(1, 2048, 2):
            idx = np.nonzero(open_)[0]
            if idx.size == 0:
                break
            gi, mi, ii = g[idx], mod[idx], inv[idx]
            hit = np.zeros(idx.size, dtype=bool)
            for target in (2 * L - d, 2 * L + d):
                ok = target % gi == 0
                o = ((target // gi) % mi) * ii % mi
                o = np.where(o == 0, mi, o)
                hit |= ok & (o <= limit)
            best[idx[hit]] = d
            open_[idx[hit]] = False
        out = np.cos(np.pi * best / m)
        for r in np.nonzero(open_)[0]:
            out[r] = np.abs(self.rows([r])[0]).max()
        out.setflags(write=False)
        self._norms = out
        return out

    def to_dict(self) -> dict:
        return {"kind": self.kind, "v": self.v, "L": self.L}


Constraints = Union[DenseConstraints, OddSineGrid]


def constraints_from_dict(data: dict) -> Constraints:
    if data["kind"] == DenseConstraints.kind:
        return DenseConstraints([[float(a) for a in r] for r in data["rows"]])
    if data["kind"] == OddSineGrid.kind:
        return OddSineGrid(int(data["v"]), int(data["L"]))
    raise ValueError(f"unknown constraint kind {data['kind']!r}")


@dataclass(eq=False)
class PartialColoringInstance:
    constraints: Constraints
    x0: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        if isinstance(self.constraints, np.ndarray) or isinstance(self.constraints, list):
            self.constraints = DenseConstraints(self.constraints)
        u, v = self.constraints.shape
        self.x0 = np.asarray(self.x0, dtype=np.float64).reshape(-1)
        c = np.asarray(self.c, dtype=np.float64).reshape(-1)
        if c.size == 1 and u != 1:
            c = np.full(u, float(c[0]))
        self.c = c
        if self.x0.size != v:
            raise ValueError(f"x0 has length {self.x0.size}, expected {v}")
        if self.c.size != u:
            raise ValueError(f"c has length {self.c.size}, expected {u}")
        if np.any(self.c < 0):
            raise ValueError("slack parameters must be nonnegative")
        if v and np.abs(self.x0).max() > 1:
            raise ValueError("x0 must lie in [-1, 1]^v")

    @property
    def u(self) -> int:
        return self.constraints.shape[0]

    @property
    def v(self) -> int:
        return self.constraints.shape[1]

    def bounds(self) -> np.ndarray:
        return (self.c + 30.0) * math.sqrt(self.v) * self.constraints.row_inf_norms()

    def discrepancies(self, x: np.ndarray) -> np.ndarray:
        return np.abs(self.constraints.matvec(np.asarray(x, dtype=np.float64) - self.x0))

    def to_dict(self) -> dict:
        return {"u": self.u, "v": self.v, "x0": [repr(float(a)) for a in self.x0],
                "c": [repr(float(a)) for a in self.c], "constraints": self.constraints.to_dict()}

    @classmethod
    def from_dict(cls, data: dict) -> "PartialColoringInstance":
        return cls(constraints_from_dict(data["constraints"]),
                   [float(a) for a in data["x0"]], [float(a) for a in data["c"]])


def check_entropy(instance: PartialColoringInstance) -> tuple[float, bool]:
    """Return (sum_r exp(-(c_r/14)^2), value <= v/16)."""
    value = float(np.exp(-((instance.c / 14.0) ** 2)).sum())
    # the two applications meet the budget with equality, so allow rounding
    return value, value <= instance.v / 16 * (1 + 1e-12)


@dataclass(eq=False)
class ColoringResult:
    x: np.ndarray
    achieved: np.ndarray
    bound: np.ndarray
    seed: int
    phases: int = 0
    restarts_used: int = 0
    phase_log: list = field(default_factory=list)
    sqrt_u_over_sqrt_v: float = 1.0

    @property
    def satisfied(self) -> np.ndarray:
        return self.achieved <= self.bound

    @property
    def all_satisfied(self) -> bool:
        return bool(np.all(self.satisfied))

    @property
    def max_ratio(self) -> float:
        return _max_ratio(self.achieved, self.bound)

    @property
    def phase_progress_ok(self) -> bool:
        return all(p["free_after"] <= p["free_before"] // 2 for p in self.phase_log)

    def summary(self) -> dict:
        return {
            "seed": self.seed, "phases": self.phases, "restarts_used": self.restarts_used,
            "all_satisfied": self.all_satisfied, "violations": int((~self.satisfied).sum()),
            "max_ratio": self.max_ratio, "max_achieved": float(self.achieved.max(initial=0.0)),
            "max_ratio_with_sqrt_u": self.max_ratio / self.sqrt_u_over_sqrt_v if self.sqrt_u_over_sqrt_v else math.inf,
            "phase_progress_ok": self.phase_progress_ok, "rng": RNG_NAME,
        }

    def to_dict(self) -> dict:
        d = self.summary()
        d.update({"x": self.x.astype(int).tolist(),
                  "achieved": [repr(float(a)) for a in self.achieved],
                  "bound": [repr(float(a)) for a in self.bound],
                  "phase_log": self.phase_log})
        return d


def _max_ratio(achieved: np.ndarray, bound: np.ndarray) -> float:
    if achieved.size == 0:
        return 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(bound > 0, achieved / np.where(bound > 0, bound, 1.0),
                     np.where(achieved > 0, np.inf, 0.0))
    return float(r.max())


@dataclass(frozen=True)
class SolverConfig:
    step: float = 0.125
    saturation: float = 1 - 1e-7
    decay: float = 2 ** -0.5      # per-phase slab budget ratio
    reserve: float = 0.05         # bound fraction kept back for final rounding
    max_steps_per_phase: int = 200_000
    polish: bool = True
    polish_max_entries: int = 1 << 22


class _Walk:
    def __init__(self, inst: PartialColoringInstance, rng: np.random.Generator, cfg: SolverConfig):
        self.inst = inst
        self.A = inst.constraints
        self.rng = rng
        self.cfg = cfg
        self.budget = inst.bounds() * (1 - cfg.reserve)
        self.log: list = []

    def run(self) -> np.ndarray:
        cfg = self.cfg
        x = self.inst.x0.copy()
        free = np.abs(x) < cfg.saturation
        p = 0
        while free.any():
            slack = self.budget * (1 - cfg.decay) * cfg.decay**p
            before = int(free.sum())
            stalled = self._phase(x, free, slack, before // 2)
            self.log.append({"phase": p, "free_before": before, "free_after": int(free.sum()),
                             "stalled": stalled})
            if stalled:
                break
            p += 1
        return x

    def _basis(self, tight: list, F: np.ndarray):
        if not tight:
            return None
        R = self.A.rows(tight)[:, F].T
        Q, s, _ = np.linalg.svd(R, full_matrices=False)
        keep = s > 1e-10 * max(s.max(initial=0.0), 1e-300)
        return Q[:, keep]

    def _phase(self, x, free, slack, goal) -> bool:
        cfg = self.cfg
        u = self.A.shape[0]
        disc = np.zeros(u)
        is_tight = np.zeros(u, dtype=bool)
        tight: list = []
        F = np.nonzero(free)[0]
        Q = None
        stale = False
        for _ in range(cfg.max_steps_per_phase):
            if free.sum() <= goal:
                return False
            if stale:
                F = np.nonzero(free)[0]
                Q = self._basis(tight, F)
                stale = False
            rank = 0 if Q is None else Q.shape[1]
            if F.size - rank <= 0:
                return True
            z = self.rng.standard_normal(F.size)
            g = z if Q is None else z - Q @ (Q.T @ z)
            xF = x[F]
            delta = np.zeros(x.size)
            delta[F] = np.clip(xF + cfg.step * g, -1.0, 1.0) - xF
            dd = self.A.matvec(delta)
            over = (np.abs(disc + dd) > slack) & ~is_tight
            if over.any():
                # exact edge-walk step along the unclipped direction
                direction = np.zeros(x.size)
                direction[F] = cfg.step * g
                dd = self.A.matvec(direction)
                with np.errstate(divide="ignore", invalid="ignore"):
                    to_face = np.where(direction[F] > 0, (1 - xF) / direction[F],
                                       np.where(direction[F] < 0, (-1 - xF) / direction[F], np.inf))
                    room = np.where(~is_tight & (dd != 0),
                                    (slack - np.sign(dd) * disc) / np.abs(dd), np.inf)
                room = np.maximum(room, 0.0)
                alpha = min(1.0, float(to_face.min(initial=np.inf)), float(room.min(initial=np.inf)))
                delta = alpha * direction
                dd = alpha * dd
                hit = np.nonzero(~is_tight & (room <= alpha * (1 + 1e-12)))[0]
                if hit.size:
                    is_tight[hit] = True
                    tight.extend(hit.tolist())
                    stale = True
                face = F[to_face <= alpha * (1 + 1e-12)]
                x[face] = np.sign(x[face] + delta[face])
                delta[face] = 0.0
            x += delta
            disc += dd
            newly = free & (np.abs(x) >= cfg.saturation)
            if newly.any():
                free &= ~newly
                stale = True
        return True


def _round(x: np.ndarray) -> np.ndarray:
    return np.where(x >= 0, 1, -1).astype(np.int8)


def _polish(inst: PartialColoringInstance, x: np.ndarray, bound: np.ndarray) -> np.ndarray:
    """Greedy single flips while they lower the worst normalized discrepancy."""
    Y = inst.constraints.dense()
    x = x.astype(np.float64)
    disc = Y @ (x - inst.x0)
    safe = np.where(bound > 0, bound, np.inf)
    current = float(np.max(np.abs(disc) / safe, initial=0.0))
    for _ in range(2 * inst.v):
        trial = disc[:, None] - 2.0 * Y * x[None, :]
        worst = np.max(np.abs(trial) / safe[:, None], axis=0, initial=0.0)
        i = int(np.argmin(worst))
        if not worst[i] < current * (1 - 1e-12):
            break
        disc = trial[:, i]
        x[i] = -x[i]
        current = float(worst[i])
    return x.astype(np.int8)


def solve(instance: PartialColoringInstance, seed: int = 0, max_restarts: int = 20,
          config: SolverConfig = SolverConfig(), guarantee: bool = True) -> ColoringResult:
    """Full +-1 coloring; restarts with fresh child seeds until every bound holds.

    With ``guarantee`` the entropy budget must hold.  When every restart
    fails, the best attempt (fewest violations, then smallest worst ratio)
    is returned with honest per-row flags.
    """
    value, ok = check_entropy(instance)
    if guarantee and not ok:
        raise EntropyError(f"entropy sum {value:.6g} exceeds v/16 = {instance.v / 16:.6g}")
    if max_restarts < 1:
        raise ValueError("max_restarts must be at least 1")
    bound = instance.bounds()
    ratio_uv = math.sqrt(instance.u) / math.sqrt(instance.v) if instance.v else 1.0
    children = np.random.SeedSequence(int(seed) & (2**64 - 1)).spawn(max_restarts)
    polish = config.polish and isinstance(instance.constraints, DenseConstraints) \
        and instance.u * instance.v <= config.polish_max_entries
    best = None
    for attempt, child in enumerate(children):
        walk = _Walk(instance, np.random.Generator(np.random.PCG64(child)), config)
        x = _round(walk.run())
        if polish:
            x = _polish(instance, x, bound)
        achieved = instance.discrepancies(x)
        res = ColoringResult(x, achieved, bound, int(seed), len(walk.log), attempt, walk.log, ratio_uv)
        if res.all_satisfied:
            return res
        key = (int((~res.satisfied).sum()), res.max_ratio)
        if best is None or key < best[0]:
            best = (key, res)
    return best[1]


def solve_exhaustive(instance: PartialColoringInstance, chunk: int = 1 << 14) -> ColoringResult:
    """Enumerate {-1,1}^v; minimise max_r achieved_r / bound_r (first minimum wins)."""
    v = instance.v
    if v > EXHAUSTIVE_MAX_V:
        raise ValueError(f"exhaustive search limited to v <= {EXHAUSTIVE_MAX_V}")
    Y = instance.constraints.dense()
    bound = instance.bounds()
    safe = np.where(bound > 0, bound, 0.0)
    bits = np.arange(v)
    best_val, best_x = math.inf, None
    for start in range(0, 1 << v, chunk):
        codes = np.arange(start, min(start + chunk, 1 << v))
        S = np.where((codes[:, None] >> bits) & 1, -1.0, 1.0)
        D = np.abs((S - instance.x0) @ Y.T)
        with np.errstate(divide="ignore", invalid="ignore"):
            R = np.where(safe > 0, D / np.where(safe > 0, safe, 1.0), np.where(D > 1e-12, np.inf, 0.0))
        worst = R.max(axis=1, initial=0.0)
        i = int(np.argmin(worst))
        if worst[i] < best_val:
            best_val, best_x = float(worst[i]), S[i]
    x = best_x.astype(np.int8)
    ratio_uv = math.sqrt(instance.u) / math.sqrt(v) if v else 1.0
    return ColoringResult(x, instance.discrepancies(x), bound, -1, 0, 0, [], ratio_uv)

"""Lattice-aligned interval collections on the circle, bump functions and
the piecewise-linear target G = K sqrt(n) sum_j alpha(I_j) Phi_{I_j}.

Interval endpoints are stored as integers k meaning k * (10 pi / n).  With
P = n/5 cells per period and H = n/10 cells per half period the two circle
symmetries act exactly on integers:

    theta -> pi - theta :  [lo, hi] -> [H - hi, H - lo]
    theta -> pi + theta :  [lo, hi] -> [lo + H, hi + H]
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from flatwood.trigcore import (
    PeriodicFunction,
    TrigPoly,
    certified_sup_norm,
    eval_uniform,
)

SUBGRID = 64
MAX_CELLS = 399  # |I| <= 3990 pi / n


class ColoringError(ValueError):
    """An interval orbit admits no symmetric coloring."""


def _norm(lo: int, hi: int, period: int) -> tuple[int, int]:
    base = lo % period
    return base, base + (hi - lo)


@dataclass(frozen=True)
class IntervalCollection:
    n: int
    intervals: tuple = ()

    def __post_init__(self):
        if self.n <= 0 or self.n % 10:
            raise ValueError("n must be a positive multiple of 10")
        P = self.period
        clean = []
        for lo, hi in self.intervals:
            lo, hi = int(lo), int(hi)
            if hi < lo or hi - lo >= P:
                raise ValueError(f"bad interval [{lo}, {hi}]")
            clean.append(_norm(lo, hi, P))
        object.__setattr__(self, "intervals", tuple(sorted(clean)))

    @property
    def period(self) -> int:
        return self.n // 5

    @property
    def half(self) -> int:
        return self.n // 10

    @property
    def unit(self) -> float:
        return 10 * math.pi / self.n

    def __len__(self) -> int:
        return len(self.intervals)

    def radians(self, i: int) -> tuple[float, float]:
        lo, hi = self.intervals[i]
        return lo * self.unit, hi * self.unit

    def reflect(self, iv) -> tuple[int, int]:
        lo, hi = iv
        return _norm(self.half - hi, self.half - lo, self.period)

    def rotate(self, iv) -> tuple[int, int]:
        lo, hi = iv
        return _norm(lo + self.half, hi + self.half, self.period)

    def orbits(self) -> list[list[tuple[int, int]]]:
        """Group interval indices into symmetry orbits as (index, sign) lists.

        Sign +1 for I and pi - I, -1 for pi + I and -I.  The first entry of
        each orbit is its representative (the +1 member with smallest lo).
        Raises ColoringError when an interval is both a +1 and a -1 image.
        """
        index = {iv: i for i, iv in enumerate(self.intervals)}
        seen = set()
        out = []
        for i, iv in enumerate(self.intervals):
            if i in seen:
                continue
            r = self.rotate(iv)
            images = [(iv, 1), (self.reflect(iv), 1), (r, -1), (self.reflect(r), -1)]
            members: dict[int, int] = {}
            for img, sign in images:
                if img not in index:
                    raise ColoringError(f"collection not closed under symmetry at {iv} -> {img}")
                j = index[img]
                if members.setdefault(j, sign) != sign:
                    raise ColoringError(f"interval {self.intervals[j]} is its own antipodal image")
            plus = sorted(j for j, s in members.items() if s > 0)
            rep = plus[0]
            orbit = [(rep, 1)] + sorted((j, s) for j, s in members.items() if j != rep)
            seen.update(members)
            out.append(orbit)
        out.sort(key=lambda o: self.intervals[o[0][0]])
        return out

    @property
    def N(self) -> int:
        """Number of free colour variables (one per symmetry orbit)."""
        try:
            return len(self.orbits())
        except ColoringError:
            return -1

    def contains(self, t) -> np.ndarray:
        """Mask of points of t lying in the union of the intervals."""
        t = np.remainder(np.asarray(t, dtype=np.float64), 2 * math.pi)
        mask = np.zeros(t.shape, dtype=bool)
        for lo, hi in self.intervals:
            a, b = lo * self.unit, hi * self.unit
            mask |= (t >= a) & (t <= b)
            if b > 2 * math.pi:
                mask |= t <= b - 2 * math.pi
        return mask

    def to_dict(self) -> dict:
        return {"n": self.n, "intervals": [list(iv) for iv in self.intervals], "N": self.N}

    @classmethod
    def from_dict(cls, data: dict) -> "IntervalCollection":
        c = cls(int(data["n"]), tuple(tuple(iv) for iv in data["intervals"]))
        if "N" in data and int(data["N"]) != c.N:
            raise ValueError("stored N does not match the interval orbits")
        return c


def merge_runs(bad: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs of True cells on the cyclic cell index, as [lo, hi]."""
    P = bad.size
    if not bad.any():
        return []
    if bad.all():
        return [(0, P)]
    start = int(np.argmin(bad))  # begin scanning at a good cell so no run is split
    runs = []
    j = 0
    while j < P:
        c = (start + j) % P
        if bad[c]:
            k = j
            while k < P and bad[(start + k) % P]:
                k += 1
            runs.append((c, c + (k - j)))
            j = k
        else:
            j += 1
    return runs


@dataclass(frozen=True, eq=False)
class Classification:
    good: np.ndarray
    bad: IntervalCollection
    threshold: float
    margin: float
    cell_min: np.ndarray


def classify(U: TrigPoly, n: int, threshold: float, symmetric: bool = False,
             subgrid: int = SUBGRID) -> Classification:
    """Split the n/5 lattice cells into good (|U| >= threshold certified) and bad.

    A cell is good when its subgrid minimum of |U| minus the Bernstein margin
    ||U'|| * spacing / 2 (||U'|| <= deg U * certified ||U||) reaches the
    threshold.  With ``symmetric`` a cell is bad whenever any of its images
    under theta -> pi +- theta is bad, so the bad set is exactly invariant.
    """
    if n <= 0 or n % 10:
        raise ValueError("n must be a positive multiple of 10")
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    cells = n // 5
    per = subgrid - 1
    vals = np.abs(eval_uniform(U, cells * per)).reshape(cells, per)
    right = np.roll(vals[:, 0], -1)
    cell_min = np.minimum(vals.min(axis=1), right)
    spacing = (10 * math.pi / n) / per
    margin = U.degree * certified_sup_norm(U).upper_bound * spacing / 2
    bad = cell_min - margin < threshold
    if symmetric:
        j = np.arange(cells)
        H = n // 10
        for img in ((H - 1 - j) % cells, (j + H) % cells, (-1 - j) % cells):
            bad = bad | bad[img]
    coll = IntervalCollection(n, tuple(merge_runs(bad)))
    return Classification(np.nonzero(~bad)[0], coll, threshold, margin, cell_min)


def validate(c: IntervalCollection, gamma) -> dict:
    """Check the six suitability / separation properties; witnesses on failure."""
    P, H = c.period, c.half
    ivs = c.intervals
    ivset = set(ivs)
    report: dict = {"witnesses": {}}

    # (a) endpoints on the lattice: exact by integer storage
    report["a"] = all(isinstance(lo, int) and isinstance(hi, int) for lo, hi in ivs)

    bad_b = [iv for iv in ivs if c.reflect(iv) not in ivset or c.rotate(iv) not in ivset]
    report["b"] = not bad_b
    if bad_b:
        report["witnesses"]["b"] = [list(iv) for iv in bad_b[:10]]

    total = len(ivs)
    limit = 4 * Fraction(gamma) * c.n
    report["c"] = total % 4 == 0 and total <= limit
    report["count"] = {"intervals": total, "orbits": c.N, "limit_4_gamma_n": float(limit),
                       "divisible_by_4": total % 4 == 0}
    if not report["c"]:
        report["witnesses"]["c"] = {"intervals": total, "limit": float(limit)}

    long_ = [iv for iv in ivs if iv[1] - iv[0] > MAX_CELLS]
    report["d"] = not long_
    if long_:
        report["witnesses"]["d"] = [list(iv) for iv in long_[:10]]

    close = []
    if total >= 2:
        for i in range(total):
            j = (i + 1) % total
            gap = ivs[j][0] - ivs[i][1] + (P if j == 0 else 0)
            if gap < 1:
                close.append([list(ivs[i]), list(ivs[j])])
    report["e"] = not close
    if close:
        report["witnesses"]["e"] = close[:10]

    # (f): in units of 5 pi / n the forbidden zones are q*n/10 +- 1, q = 0..3
    hits = []
    for lo, hi in ivs:
        for q in range(5):
            centre = q * H  # q * pi/2 expressed in half-cells
            if any(2 * lo - sh <= centre + 1 and 2 * hi - sh >= centre - 1 for sh in (0, 2 * P)):
                hits.append({"interval": [lo, hi], "multiple_of_half_pi": q % 4})
                break
    report["f"] = not hits
    if hits:
        report["witnesses"]["f"] = hits[:10]
    return report


@dataclass(frozen=True)
class BumpFunction:
    """Phi_[a,b]: 1 on [a,b], 0 beyond 5pi/n of it, linear ramps between."""

    a: float
    b: float
    n: int

    @property
    def ramp(self) -> float:
        return 5 * math.pi / self.n

    def __call__(self, t):
        h = self.ramp
        t = np.asarray(t, dtype=np.float64)
        v = np.minimum((t - (self.a - h)) / h, ((self.b + h) - t) / h)
        out = np.clip(v, 0.0, 1.0)
        return float(out) if out.ndim == 0 else out

    def sine_integral(self, omega):
        """Integral over R of Phi(t) sin(omega t)."""
        return _bump_integral(self.a, self.b, self.ramp, omega, np.sin)

    def cosine_integral(self, omega):
        return _bump_integral(self.a, self.b, self.ramp, omega, np.cos)


def _bump_integral(a, b, h, omega, centre_fn):
    # trapezoid transform: (4/(h w^2)) sin(w h/2) sin(w (b-a+h)/2) f(w (a+b)/2)
    w = np.asarray(omega, dtype=np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        val = 4.0 / (h * w * w) * np.sin(w * h / 2) * np.sin(w * (b - a + h) / 2) * centre_fn(w * (a + b) / 2)
    zero = w == 0
    if np.any(zero):
        val = np.where(zero, (b - a + h) * centre_fn(0.0), val)
    return float(val) if val.ndim == 0 else val


def lattice_bump_integrals(n: int, lo: int, hi: int, omegas: np.ndarray):
    """Exact-phase sine and cosine integrals of Phi over a lattice interval.

    Every angle in the trapezoid transform is pi * j / (2n) for an integer j,
    which is reduced modulo 4n before taking sin / cos.
    """
    w = np.asarray(omegas, dtype=np.int64)
    q = 4 * n

    def s(j):
        return np.sin(np.pi * (j % q) / (2 * n))

    def c(j):
        return np.cos(np.pi * (j % q) / (2 * n))

    h = 5 * math.pi / n
    front = s(5 * w) * s(5 * w * (2 * (hi - lo) + 1))
    zero = w == 0
    scale = 4.0 / (h * np.where(zero, 1, w).astype(np.float64) ** 2)
    centre = 10 * w * (lo + hi)
    sin_part = scale * front * s(centre)
    cos_part = scale * front * c(centre)
    if np.any(zero):
        length = (hi - lo) * 10 * math.pi / n + h
        sin_part = np.where(zero, 0.0, sin_part)
        cos_part = np.where(zero, length, cos_part)
    return sin_part, cos_part


@dataclass(frozen=True, eq=False)
class SymmetricColoring:
    """alpha on a collection, fixed by one free sign per symmetry orbit."""

    collection: IntervalCollection
    free: np.ndarray
    values: np.ndarray = field(init=False)

    def __post_init__(self):
        orbits = self.collection.orbits()
        free = np.asarray(self.free, dtype=np.int64).reshape(-1)
        if free.size != len(orbits):
            raise ValueError(f"need {len(orbits)} free signs, got {free.size}")
        if not np.all(np.abs(free) == 1):
            raise ValueError("colors must be +-1")
        vals = np.zeros(len(self.collection), dtype=np.int64)
        for x, orbit in zip(free, orbits):
            for j, sign in orbit:
                vals[j] = sign * x
        free.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "free", free)
        object.__setattr__(self, "values", vals)

    def is_symmetric(self) -> bool:
        c = self.collection
        idx = {iv: i for i, iv in enumerate(c.intervals)}
        for i, iv in enumerate(c.intervals):
            if self.values[idx[c.reflect(iv)]] != self.values[i]:
                return False
            if self.values[idx[c.rotate(iv)]] != -self.values[i]:
                return False
        return True

    def to_dict(self) -> dict:
        return {"free": self.free.tolist(), "values": self.values.tolist()}


def orbit_sine_matrix(collection: IntervalCollection, K: float, n_terms: int) -> np.ndarray:
    """y[k-1, j] = b_{2k-1} contribution of orbit j with its free sign +1.

    For a four-member orbit this equals (4 K sqrt(n)/pi) * int Phi_{I_j} sin((2k-1)t).
    """
    n = collection.n
    orbits = collection.orbits()
    omegas = 2 * np.arange(1, n_terms + 1) - 1
    Y = np.zeros((n_terms, len(orbits)))
    amp = K * math.sqrt(n) / math.pi
    for j, orbit in enumerate(orbits):
        for i, sign in orbit:
            lo, hi = collection.intervals[i]
            s, _ = lattice_bump_integrals(n, lo, hi, omegas)
            Y[:, j] += sign * s
    return amp * Y


def bump_sine_coefficients(collection: IntervalCollection, coloring: SymmetricColoring,
                           K: float, k: int) -> tuple[float, np.ndarray]:
    """b_{2k-1}(G_alpha) and the per-orbit y_{k,j}."""
    if not 1 <= k <= collection.n:
        raise ValueError("k must lie in [1, n]")
    y = orbit_sine_matrix(collection, K, k)[k - 1]
    return float(y @ coloring.free), y


class TargetFunction(PeriodicFunction):
    """G_alpha = K sqrt(n) sum_j alpha(I_j) Phi_{I_j} on the circle."""

    def __init__(self, coloring: SymmetricColoring, K: float):
        self.coloring = coloring
        self.collection = coloring.collection
        self.K = float(K)
        self.n = self.collection.n
        super().__init__(self._evaluate, self._exact)

    @property
    def amplitude(self) -> float:
        return self.K * math.sqrt(self.n)

    def _evaluate(self, t):
        t = np.asarray(t, dtype=np.float64)
        out = np.zeros(t.shape)
        h = 5 * math.pi / self.n
        for (lo, hi), alpha in zip(self.collection.intervals, self.coloring.values):
            a, b = lo * self.collection.unit, hi * self.collection.unit
            centre, half = (a + b) / 2, (b - a) / 2
            d = np.abs(np.remainder(t - centre + math.pi, 2 * math.pi) - math.pi)
            out += alpha * np.clip((half + h - d) / h, 0.0, 1.0)
        return self.amplitude * out

    def sample_uniform(self, size: int, shift: float = 0.0) -> np.ndarray:
        """Values at shift + 2 pi r / size, touching only points inside each bump."""
        out = np.zeros(size)
        h = 5 * math.pi / self.n
        step = 2 * math.pi / size
        for (lo, hi), alpha in zip(self.collection.intervals, self.coloring.values):
            a, b = lo * self.collection.unit, hi * self.collection.unit
            r = np.arange(math.ceil((a - h - shift) / step), math.floor((b + h - shift) / step) + 1)
            t = shift + r * step
            out[r % size] += alpha * np.clip(np.minimum(t - (a - h), (b + h) - t) / h, 0.0, 1.0)
        return self.amplitude * out

    def _exact(self, kmax: int):
        k = np.arange(kmax + 1)
        a = np.zeros(kmax + 1)
        b = np.zeros(kmax + 1)
        for (lo, hi), alpha in zip(self.collection.intervals, self.coloring.values):
            s, c = lattice_bump_integrals(self.n, lo, hi, k)
            a += alpha * c
            b += alpha * s
        a *= self.amplitude / math.pi
        b *= self.amplitude / math.pi
        a[0] /= 2.0
        b[0] = 0.0
        return a, b

    def modulus_bound(self, delta: float) -> float:
        """omega(G, delta) <= K sqrt(n) min(2, delta n / (5 pi)).

        Opposite colours on neighbouring intervals can swing by 2 K sqrt(n)
        across a gap, so the cap is 2 rather than 1.
        """
        return self.amplitude * min(2.0, delta * self.n / (5 * math.pi))


def zero_count_bound(U: TrigPoly) -> int:
    """Runs of the sublevel set |U| < threshold on a period: at most 2 deg U."""
    return 2 * U.degree

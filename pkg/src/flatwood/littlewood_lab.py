"""Brute-force oracles over small Littlewood polynomials.

Coefficient vectors list a_0 first.  Three classes are enumerated:

* ``all``: a_0 = +1 fixed, 2^d members;
* ``self_reciprocal``: a_j = a_{d-j}, both signs, 2^ceil((d+1)/2) members;
* ``skew_reciprocal``: a_j = (-1)^j a_{d-j}, both signs.  The middle
  coefficient forces d = 0 (mod 4); other degrees give an empty class.

Moduli are sampled on the 128d-point grid t_r = (2r-1) pi / (128 d); the
certified maximum is the grid maximum over cos(pi/64).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from flatwood.trigcore import GRID_OVERSAMPLING, RIESZ_FACTOR

CLASSES = ("all", "self_reciprocal", "skew_reciprocal")
DEFAULT_BUDGET = 1 << 26
ZERO_TOL = 1e-6          # times sqrt(d): refined minimum counted as a zero
SIGN_GRID = 1 << 12


class BudgetError(ValueError):
    pass


def grid_points(degree: int) -> np.ndarray:
    L = GRID_OVERSAMPLING * max(degree, 1)
    r = np.arange(1, 4 * L + 1)
    return (2 * r - 1) * math.pi / (4 * L)


def class_size(degree: int, cls: str) -> int:
    if cls == "all":
        return 1 << degree
    if cls == "self_reciprocal":
        return 1 << ((degree + 2) // 2)
    if cls == "skew_reciprocal":
        return 1 << (degree // 2 + 1) if degree % 4 == 0 else 0
    raise ValueError(f"unknown class {cls!r}; choose from {CLASSES}")


def _free_to_coeffs(bits: np.ndarray, degree: int, cls: str) -> np.ndarray:
    """Map rows of free +-1 choices to full coefficient rows."""
    d = degree
    out = np.empty((bits.shape[0], d + 1), dtype=np.int8)
    if cls == "all":
        out[:, 0] = 1
        out[:, 1:] = bits
        return out
    half = (d + 1) // 2  # pairs (j, d-j) with j < d-j
    j = np.arange(half)
    out[:, j] = bits[:, :half]
    if cls == "self_reciprocal":
        out[:, d - j] = bits[:, :half]
    else:
        out[:, d - j] = bits[:, :half] * np.where(j % 2 == 0, 1, -1).astype(np.int8)
    if d % 2 == 0:
        out[:, d // 2] = bits[:, half]
    return out


def enumerate_class(degree: int, cls: str, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Members with codes start..stop-1 in lexicographic order (-1 before +1, a_0 first)."""
    size = class_size(degree, cls)
    stop = size if stop is None else min(stop, size)
    if stop <= start:
        return np.empty((0, degree + 1), dtype=np.int8)
    free = degree if cls == "all" else (degree + 2) // 2
    codes = np.arange(start, stop, dtype=np.int64)
    # most significant bit drives the first free coefficient; bit 1 means +1
    shifts = np.arange(free - 1, -1, -1)
    bits = np.where((codes[:, None] >> shifts) & 1, 1, -1).astype(np.int8)
    return _free_to_coeffs(bits, degree, cls)


def in_class(coeffs, cls: str) -> bool:
    a = np.asarray(coeffs, dtype=np.int64)
    d = a.size - 1
    if not np.all(np.abs(a) == 1):
        return False
    if cls == "all":
        return True
    rev = a[::-1]
    if cls == "self_reciprocal":
        return bool(np.array_equal(a, rev))
    if cls == "skew_reciprocal":
        return bool(np.array_equal(a, np.where(np.arange(d + 1) % 2 == 0, 1, -1) * rev))
    raise ValueError(f"unknown class {cls!r}")


def _moduli(C: np.ndarray, t: np.ndarray) -> np.ndarray:
    k = np.arange(C.shape[1])
    phase = np.outer(k, t)
    Cf = C.astype(np.float64)
    re = Cf @ np.cos(phase)
    im = Cf @ np.sin(phase)
    return np.hypot(re, im)


def _refine_min(coeffs: np.ndarray, t0: float, h: float) -> tuple[float, float]:
    """Golden-section search for min |P(e^{it})| in the grid cell bracket around t0."""
    c = np.asarray(coeffs, dtype=np.float64)
    k = np.arange(c.size)

    def f(t):
        return abs(np.dot(c, np.exp(1j * k * t)))

    f0 = f(t0)
    if f0 < f(t0 - h) and f0 < f(t0 + h):
        res = scipy.optimize.minimize_scalar(f, bracket=(t0 - h, t0, t0 + h), method="golden",
                                             tol=1e-12)
    else:
        res = scipy.optimize.minimize_scalar(f, bounds=(t0 - h, t0 + h), method="bounded",
                                             options={"xatol": 1e-14})
    if res.fun < f0:
        return float(res.fun), float(res.x)
    return f0, t0


@dataclass(frozen=True)
class ModulusStats:
    grid_min: float
    grid_max: float
    certified_max: float
    argmin_t: float
    refined_min: float
    refined_t: float

    @property
    def ratio(self) -> float:
        return self.certified_max / self.grid_min if self.grid_min > 0 else math.inf


def modulus_stats(coeffs) -> ModulusStats:
    c = np.asarray(coeffs, dtype=np.int8).reshape(1, -1)
    d = c.shape[1] - 1
    t = grid_points(d)
    mod = _moduli(c, t)[0]
    i = int(np.argmin(mod))
    fmin, tmin = _refine_min(c[0], float(t[i]), float(t[1] - t[0]))
    gmax = float(mod.max())
    return ModulusStats(float(mod[i]), gmax, gmax * RIESZ_FACTOR, float(t[i]), fmin, tmin)


@dataclass
class SearchResult:
    degree: int
    cls: str
    count: int
    best_coeffs: np.ndarray | None
    best_ratio: float
    best_stats: ModulusStats | None
    histogram: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        s = self.best_stats
        return {
            "degree": self.degree, "class": self.cls, "count": self.count,
            "best_coeffs": None if self.best_coeffs is None else self.best_coeffs.astype(int).tolist(),
            "best_string": None if self.best_coeffs is None else "".join(
                "+" if a > 0 else "-" for a in self.best_coeffs),
            "best_ratio": self.best_ratio if math.isfinite(self.best_ratio) else "inf",
            "best_grid_min": None if s is None else s.grid_min,
            "best_refined_min": None if s is None else s.refined_min,
            "best_certified_max": None if s is None else s.certified_max,
            "histogram": self.histogram,
            "note": "exhaustive evidence table for this degree only",
        }


def _histogram(ratios: np.ndarray, bins: int = 20) -> dict:
    finite = ratios[np.isfinite(ratios)]
    out = {"infinite": int((~np.isfinite(ratios)).sum())}
    if finite.size:
        hi = max(float(finite.max()), 1.0 + 1e-9)
        counts, edges = np.histogram(finite, bins=np.geomspace(1.0, hi * (1 + 1e-12), bins + 1))
        out["edges"] = edges.tolist()
        out["counts"] = counts.tolist()
    return out


def enumerate_flattest(degree: int, cls: str = "all", budget: int = DEFAULT_BUDGET,
                       chunk: int = 1 << 12) -> SearchResult:
    """Exhaustive scan for the smallest certified_max / grid_min ratio.

    Ties (ratios within 1e-9 relative) go to the lexicographically smallest
    coefficient vector, which is the first one met in enumeration order.
    Candidates whose refined minimum vanishes get ratio infinity; the
    histogram reflects those refinements only for the candidates examined.
    """
    if degree < 1:
        raise ValueError("degree must be at least 1")
    size = class_size(degree, cls)
    if size > budget:
        raise BudgetError(f"class {cls} at degree {degree} has {size} members, budget {budget}")
    t = grid_points(degree)
    ratios = np.empty(size)
    best_i, best_r = -1, math.inf
    for start in range(0, size, chunk):
        C = enumerate_class(degree, cls, start, start + chunk)
        mod = _moduli(C, t)
        gmin = mod.min(axis=1)
        gmax = mod.max(axis=1) * RIESZ_FACTOR
        with np.errstate(divide="ignore"):
            r = np.where(gmin > 1e-12 * math.sqrt(degree), gmax / gmin, np.inf)
        # a zero between grid points shows up only after refinement
        for i in np.argsort(r, kind="stable"):
            if not r[i] < best_r * (1 - 1e-9):
                break
            if modulus_stats(C[i]).refined_min <= ZERO_TOL * math.sqrt(degree):
                r[i] = np.inf
                continue
            tie = np.nonzero(r <= r[i] * (1 + 1e-9))[0]
            j = int(tie[0])
            if j != i and modulus_stats(C[j]).refined_min <= ZERO_TOL * math.sqrt(degree):
                r[j] = np.inf
                j = int(i)
            best_i, best_r = start + j, float(r[j])
            break
        ratios[start : start + C.shape[0]] = r
    if best_i < 0:
        first = enumerate_class(degree, cls, 0, 1)
        return SearchResult(degree, cls, size, first[0] if size else None,
                            math.inf, None, _histogram(ratios))
    best = enumerate_class(degree, cls, best_i, best_i + 1)[0]
    return SearchResult(degree, cls, size, best, best_r, modulus_stats(best), _histogram(ratios))


@dataclass(frozen=True)
class ZeroCheck:
    degree: int
    count: int
    all_have_zero: bool
    failures: list
    method: str
    example_witness: dict

    def to_dict(self) -> dict:
        return {"degree": self.degree, "count": self.count, "all_have_zero": self.all_have_zero,
                "failures": self.failures, "method": self.method, "example_witness": self.example_witness}


def _zero_witness(coeffs: np.ndarray) -> dict | None:
    a = np.asarray(coeffs, dtype=np.int64)
    d = a.size - 1
    if d % 2 == 1:
        # a_j = a_{d-j} pairs opposite parities, so P(-1) vanishes exactly
        val = int(np.sum(a * np.where(np.arange(d + 1) % 2 == 0, 1, -1)))
        return {"kind": "factor z+1", "t": math.pi, "value": val} if val == 0 else None
    h = d // 2
    t = np.arange(SIGN_GRID) * (math.pi / SIGN_GRID)
    k = np.arange(1, h + 1)
    # z^{-d/2} P(z) = a_h + 2 sum_k a_{h-k} cos(k t) on |z| = 1
    f = a[h] + 2 * np.cos(np.outer(t, k)) @ a[h - k].astype(np.float64)
    f = np.append(f, a[h] + 2 * float(np.sum(a[h - k] * np.cos(k * math.pi))))
    s = np.sign(f)
    change = np.nonzero(s[:-1] * s[1:] <= 0)[0]
    if change.size:
        j = int(change[0])
        return {"kind": "sign change", "t_lo": float(j * math.pi / SIGN_GRID),
                "t_hi": float((j + 1) * math.pi / SIGN_GRID)}
    st = modulus_stats(a)
    if st.refined_min <= ZERO_TOL * math.sqrt(d):
        return {"kind": "refined minimum", "t": st.refined_t, "value": st.refined_min}
    return None


def self_reciprocal_zero_check(max_degree: int, min_degree: int = 1) -> list[ZeroCheck]:
    if max_degree > 20:
        raise ValueError("max_degree is limited to 20")
    out = []
    for d in range(min_degree, max_degree + 1):
        members = enumerate_class(d, "self_reciprocal")
        failures = []
        example = None
        for a in members:
            w = _zero_witness(a)
            if w is None:
                failures.append("".join("+" if x > 0 else "-" for x in a))
            elif example is None:
                example = w
        method = "P(-1) = 0" if d % 2 else "sign change of z^(-d/2) P(z) or refined minimum"
        out.append(ZeroCheck(d, members.shape[0], not failures, failures, method, example or {}))
    return out

"""Rudin-Shapiro pairs, prefixes, the nine-block polynomial T and the
cosine polynomial c(t) = T(2t), with numeric audits of their classical
bounds.

Recursion: P_0 = Q_0 = 1, P_{m+1} = P_m + z^{2^m} Q_m, Q_{m+1} = P_m - z^{2^m} Q_m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np
import scipy.fft

from flatwood.trigcore import TrigPoly, certified_sup_norm, fast_degree, fft_workers

MAX_GENERATION = 24
DELTA = math.sin(math.pi / 8) ** 2
BLOCKS = 9

DESK_WINDOW = (Fraction(1, 2**10), Fraction(1, 2**7))
ASYMPTOTIC_WINDOW = (Fraction(1, 2**75), Fraction(1, 2**72))


class WindowError(ValueError):
    """No odd generation m puts gamma = 9*2^m/(2n) inside the window."""


@dataclass(frozen=True, eq=False)
class RSPair:
    m: int
    p: np.ndarray
    q: np.ndarray

    @property
    def M(self) -> int:
        return 1 << self.m


@dataclass(frozen=True, eq=False)
class RSPrefix:
    n: int
    coeffs: np.ndarray


def rs_pair(m: int) -> RSPair:
    if not 0 <= m <= MAX_GENERATION:
        raise ValueError(f"generation m must lie in [0, {MAX_GENERATION}], got {m}")
    p = np.ones(1, dtype=np.int8)
    q = np.ones(1, dtype=np.int8)
    for _ in range(m):
        p, q = np.concatenate((p, q)), np.concatenate((p, -q))
    p.setflags(write=False)
    q.setflags(write=False)
    return RSPair(m, p, q)


def rs_prefix(n: int) -> RSPrefix:
    """First n coefficients shared by every P_m with 2^m >= n."""
    if n < 1:
        raise ValueError("prefix length must be positive")
    m = max(0, (n - 1).bit_length())
    coeffs = rs_pair(m).p[:n].copy()
    coeffs.setflags(write=False)
    return RSPrefix(n, coeffs)


def poly_values_on_roots(coeffs: np.ndarray, size: int, shift: float = 0.0) -> np.ndarray:
    """sum_k c_k exp(i k (shift + 2 pi j/size)) for j = 0..size-1."""
    k = np.arange(coeffs.size)
    c = coeffs.astype(np.complex128)
    if shift:
        c = c * np.exp(1j * k * shift)
    if size >= coeffs.size:
        buf = np.zeros(size, dtype=np.complex128)
        buf[: coeffs.size] = c
    else:
        # fold frequencies modulo size; exact since exp(i*2*pi*j*size/size) = 1
        buf = np.zeros(size, dtype=np.complex128)
        np.add.at(buf, k % size, c)
    return size * scipy.fft.ifft(buf, workers=fft_workers())


def p_at_one(m: int) -> int:
    """P_m(1) as an exact integer sum."""
    return int(rs_pair(m).p.astype(np.int64).sum())


def build_T(m: int) -> TrigPoly:
    """Re((1 + e^{iMt} + ... + e^{8iMt}) P_m(e^{it})) as a cosine polynomial.

    deg P_m = M - 1, so the nine shifted copies do not overlap and the
    coefficient vector is p tiled nine times.
    """
    if m % 2 == 0:
        raise ValueError("build_T needs an odd generation m")
    p = rs_pair(m).p
    return TrigPoly(np.tile(p, BLOCKS).astype(np.float64))


def T_at_zero(m: int) -> int:
    return BLOCKS * p_at_one(m)


def gamma_of(n: int, m: int) -> Fraction:
    return Fraction(BLOCKS * 2**m, 2 * n)


def select_generation(n: int, window) -> Optional[int]:
    """Smallest odd m with gamma(n, m) in [lo, hi), or None."""
    lo, hi = Fraction(window[0]), Fraction(window[1])
    m = 1
    while gamma_of(n, m) < hi:
        if gamma_of(n, m) >= lo:
            return m
        m += 2
    return None


def minimal_feasible_n(window) -> int:
    """Smallest n divisible by 10 admitting an odd m for ``window``."""
    lo, hi = Fraction(window[0]), Fraction(window[1])
    best = None
    # gamma shrinks with n, so m = 1 and m = 3 bracket the first feasible n
    for m in (1, 3, 5):
        # need lo <= 9*2^m/(2n) < hi  <=>  9*2^m/(2hi) < n <= 9*2^m/(2lo)
        low = Fraction(BLOCKS * 2**m) / (2 * hi)
        n = (math.floor(low) // 10 + 1) * 10
        if gamma_of(n, m) >= lo and (best is None or n < best):
            best = n
    if best is None:
        raise WindowError("window admits no odd generation")
    return best


@dataclass(frozen=True, eq=False)
class FlatCosine:
    """c(t) = sum_{k<mu} d_k cos(2kt), the RS coefficients tiled nine times."""

    n: int
    m: int
    d: np.ndarray

    @property
    def M(self) -> int:
        return 1 << self.m

    @property
    def mu(self) -> int:
        return BLOCKS * self.M

    @property
    def gamma(self) -> Fraction:
        return gamma_of(self.n, self.m)

    @property
    def poly(self) -> TrigPoly:
        a = np.zeros(2 * self.mu - 1)
        a[::2] = self.d
        return TrigPoly(a)


def build_cosine(n: int, window=DESK_WINDOW) -> FlatCosine:
    if n <= 0 or n % 10:
        raise ValueError("n must be a positive multiple of 10")
    lo, hi = Fraction(window[0]), Fraction(window[1])
    if hi <= lo:
        raise ValueError("empty gamma window")
    m = select_generation(n, (lo, hi))
    if m is None:
        try:
            need = minimal_feasible_n((lo, hi))
            detail = f"smallest feasible n is {need} (~2^{math.log2(need):.2f})"
        except WindowError:
            detail = "the window admits no odd generation at all"
        raise WindowError(
            f"no odd m puts gamma = 9*2^m/(2n) in [{float(lo):.6g}, {float(hi):.6g}) for n = {n}; {detail}"
        )
    d = np.tile(rs_pair(m).p, BLOCKS).copy()
    d.setflags(write=False)
    return FlatCosine(n, m, d)


# --- audits -----------------------------------------------------------------

def audit_parallelogram(pair: RSPair, grid_size: int) -> float:
    """max over the grid of | |P|^2 + |Q|^2 - 2^{m+1} |."""
    if grid_size < 4 * pair.M:
        raise ValueError("grid_size must be at least 4M")
    P = poly_values_on_roots(pair.p, grid_size)
    Q = poly_values_on_roots(pair.q, grid_size)
    total = P.real**2 + P.imag**2 + Q.real**2 + Q.imag**2
    return float(np.abs(total - 2.0 ** (pair.m + 1)).max())


def values_at_roots_of_unity(pair: RSPair) -> np.ndarray:
    """|P_m(z_j)|^2 for z_j = exp(2 pi i j/M), j = 0..M-1."""
    P = poly_values_on_roots(pair.p, pair.M)
    return P.real**2 + P.imag**2


def audit_adjacent_peaks(pair: RSPair) -> float:
    """min over j of max(|P_m(z_j)|^2, |P_m(z_{j+1})|^2), cyclically."""
    if pair.m < 1:
        raise ValueError("needs m >= 1")
    v = values_at_roots_of_unity(pair)
    return float(np.maximum(v, np.roll(v, -1)).min())


def qualifying_indices(pair: RSPair) -> np.ndarray:
    v = values_at_roots_of_unity(pair)
    return np.nonzero(v >= 2 * DELTA * pair.M * (1 - 1e-12))[0]


def _offset_rows(pair: RSPair, offsets: np.ndarray):
    """Yield P_m(exp(i(t_j + s))) over all root indices j, one offset s at a time."""
    for s in offsets:
        yield poly_values_on_roots(pair.p, pair.M, shift=float(s))


def audit_neighborhood(pair: RSPair, points: int = 1000) -> dict:
    """min |P_m|^2 on [t_j - delta/(2M), t_j + delta/(2M)] over qualifying j."""
    M = pair.M
    js = qualifying_indices(pair)
    s = np.linspace(-DELTA / (2 * M), DELTA / (2 * M), points)
    worst = math.inf
    if js.size:
        for row in _offset_rows(pair, s):
            worst = min(worst, float((np.abs(row[js]) ** 2).min()))
    return {"qualifying": int(js.size), "min_value": worst, "bound": DELTA * M,
            "pass": bool(worst >= DELTA * M)}


@dataclass(frozen=True)
class PeakWitness:
    j: int
    applicable: bool
    a: float = math.nan
    b: float = math.nan
    T_a: float = math.nan
    T_b: float = math.nan
    found: bool = False


def audit_peak_points(m: int, points: int = 1000) -> tuple[list, float]:
    """Search both side windows of each qualifying root for large |T|.

    Returns the witness list and the certified ||T|| (upper bound) that the
    0.005 factor is applied to.  Uses T(t_j + s) = Re(D(s) P_m(e^{i(t_j+s)}))
    with D(s) = sum_{q<9} e^{iqMs}, since e^{iqMt_j} = 1.
    """
    if m % 2 == 0 or not 1 <= m <= 16:
        raise ValueError("audit_peak_points needs odd m <= 16")
    pair = rs_pair(m)
    M = pair.M
    norm = certified_sup_norm(build_T(m)).upper_bound
    floor = 0.005 * norm
    qual = np.zeros(M, dtype=bool)
    qual[qualifying_indices(pair)] = True
    right = np.linspace(math.pi / (32 * M), 3 * math.pi / (32 * M), points)
    best = {}
    for side, offsets in (("a", -right[::-1]), ("b", right)):
        D = np.exp(1j * M * np.multiply.outer(offsets, np.arange(BLOCKS))).sum(axis=1)
        top = np.full(M, -1.0)
        arg = np.zeros(M)
        for d, s, row in zip(D, offsets, _offset_rows(pair, offsets)):
            v = np.abs((d * row).real)
            better = v > top
            top[better] = v[better]
            arg[better] = s
        best[side] = (top, arg)
    witnesses = []
    for j in range(M):
        if not qual[j]:
            witnesses.append(PeakWitness(j, False))
            continue
        tj = 2 * math.pi * j / M
        Ta, Tb = float(best["a"][0][j]), float(best["b"][0][j])
        witnesses.append(PeakWitness(j, True, tj + float(best["a"][1][j]), tj + float(best["b"][1][j]),
                                     Ta, Tb, Ta >= floor and Tb >= floor))
    return witnesses, norm


def audit_prefix_bound(n: int) -> tuple[float, float]:
    """(certified sup of |P_{<n}(e^{it})|, 5 sqrt(n))."""
    return certified_prefix_sup(rs_prefix(n).coeffs), 5 * math.sqrt(n)


def certified_prefix_sup(coeffs: np.ndarray) -> float:
    """Certified upper bound for max |sum c_k e^{ikt}|.

    |f|^2 is a real trigonometric polynomial of degree deg f, so the Riesz
    sampling bound applies to it on the L = 32 * deg grid.
    """
    deg = coeffs.size - 1
    size = 4 * 32 * fast_degree(deg)
    vals = poly_values_on_roots(coeffs.astype(np.float64), size, shift=math.pi / size)
    sq = float((vals.real**2 + vals.imag**2).max())
    return math.sqrt(sq / math.cos(math.pi / 64))


def prefix_sup_scan(nmax: int, reanchor: int = 64) -> np.ndarray:
    """Certified sup |P_{<n}(e^{it})| for every n = 1..nmax in one sweep.

    All prefixes share the uniform grid of 128 * nmax points: every t is
    within pi/(128 nmax) of a node, which is the Riesz distance needed by
    |P_{<n}|^2 of degree n - 1 < nmax.
    """
    coeffs = rs_prefix(nmax).coeffs.astype(np.float64)
    size = 128 * max(nmax, 1)
    t = 2 * math.pi * np.arange(size) / size
    step = np.exp(1j * t)
    z = np.ones(size, dtype=np.complex128)
    acc = np.zeros(size, dtype=np.complex128)
    out = np.empty(nmax)
    for k in range(nmax):
        if k % reanchor == 0:
            z = np.exp(1j * k * t)
        acc += coeffs[k] * z
        out[k] = float((acc.real**2 + acc.imag**2).max())
        z *= step
    return np.sqrt(out / math.cos(math.pi / 64))


def rs_audit_report(m: int) -> list[dict]:
    """JSON-ready audit rows {lemma, parameter, bound, measured, pass} for generation m."""
    pair = rs_pair(m)
    M = pair.M
    rows = []
    defect = audit_parallelogram(pair, 4 * M)
    rows.append({"lemma": "parallelogram identity |P|^2+|Q|^2 = 2^(m+1)", "parameter": {"m": m},
                 "bound": 1e-8 * 2 ** (m + 1), "measured": defect,
                 "pass": defect <= 1e-8 * 2 ** (m + 1)})
    pm1 = p_at_one(m)
    expected = 2 ** ((m + 1) // 2) if m % 2 else 2 ** (m // 2)
    rows.append({"lemma": "P_m(1) closed form", "parameter": {"m": m}, "bound": expected,
                 "measured": pm1, "pass": pm1 == expected})
    if m >= 1:
        adj = audit_adjacent_peaks(pair)
        rows.append({"lemma": "adjacent peaks max(|P(z_j)|^2,|P(z_j+1)|^2) >= 2 delta M",
                     "parameter": {"m": m}, "bound": 2 * DELTA * M, "measured": adj,
                     "pass": adj >= 2 * DELTA * M})
    if 1 <= m <= 14:
        nb = audit_neighborhood(pair)
        rows.append({"lemma": "neighbourhood |P|^2 >= delta M near qualifying roots",
                     "parameter": {"m": m}, "bound": nb["bound"], "measured": nb["min_value"],
                     "pass": nb["pass"]})
    if m % 2 == 1 and m <= 16:
        T = build_T(m)
        cert = certified_sup_norm(T)
        t0 = T_at_zero(m)
        rows.append({"lemma": "||T|| = |T(0)| = 9*2^((m+1)/2)", "parameter": {"m": m},
                     "bound": 9 * 2 ** ((m + 1) // 2),
                     "measured": {"T0": t0, "cert_lower": cert.lower_bound, "cert_upper": cert.upper_bound},
                     "pass": t0 == 9 * 2 ** ((m + 1) // 2) and cert.upper_bound <= 1.0013 * t0})
        witnesses, norm = audit_peak_points(m)
        app = [w for w in witnesses if w.applicable]
        worst = min((min(w.T_a, w.T_b) for w in app), default=math.inf)
        rows.append({"lemma": "peak points |T(a_j)|,|T(b_j)| >= 0.005 ||T||", "parameter": {"m": m},
                     "bound": 0.005 * norm, "measured": worst,
                     "pass": all(w.found for w in app)})
    n = min(M, 2048)
    sup, bound = audit_prefix_bound(n)
    rows.append({"lemma": "prefix bound |P_<n| <= 5 sqrt(n)", "parameter": {"n": n},
                 "bound": bound, "measured": sup, "pass": sup <= bound})
    return rows

"""Real trigonometric polynomials.

A :class:`TrigPoly` of degree ``nu`` is

    p(t) = a_0 + sum_{k=1}^{nu} (a_k cos(kt) + b_k sin(kt)).

Everything downstream (cosine stage, sine stage, audits) is expressed in
this currency.  Sup-norms are certified with the Riesz sampling bound: on the
grid t_r = (2r-1)pi/(4L), r = 1..4L, with L = 32*nu,

    max|p| <= max_r |p(t_r)| / cos(pi/64).
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.fft
from scipy.optimize import minimize_scalar

# (cos(pi/64))^{-1} ~ 1.001206; the rounded 1.0013 is never used internally.
RIESZ_FACTOR = 1.0 / math.cos(math.pi / 64)
GRID_OVERSAMPLING = 32

_CHUNK_ELEMENTS = 1 << 21


def fft_workers() -> int:
    """Thread cap for FFT work, from FLATWOOD_THREADS (default 1)."""
    try:
        return max(1, int(os.environ.get("FLATWOOD_THREADS", "1")))
    except ValueError:
        return 1


class QuadratureError(RuntimeError):
    pass


def _as_vector(x, length: Optional[int] = None) -> np.ndarray:
    arr = np.array(x, dtype=np.float64).reshape(-1)
    if length is not None and arr.size != length:
        raise ValueError(f"expected {length} coefficients, got {arr.size}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TrigPoly:
    """Immutable real trigonometric polynomial.

    ``cos`` holds a_0..a_nu and ``sin`` holds b_1..b_nu.  Trailing zero pairs
    are trimmed on construction so the stored degree is tight.
    """

    cos: np.ndarray
    sin: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        a = np.array(self.cos, dtype=np.float64).reshape(-1)
        b = np.array(self.sin, dtype=np.float64).reshape(-1)
        if a.size == 0:
            a = np.zeros(1)
        nu = max(a.size - 1, b.size)
        a = np.pad(a, (0, nu + 1 - a.size))
        b = np.pad(b, (0, nu - b.size))
        while nu > 0 and a[nu] == 0.0 and b[nu - 1] == 0.0:
            nu -= 1
        object.__setattr__(self, "cos", _as_vector(a[: nu + 1]))
        object.__setattr__(self, "sin", _as_vector(b[:nu]))

    @classmethod
    def from_frequencies(cls, degree: int, cos_at=None, sin_at=None) -> "TrigPoly":
        """Build from sparse ``{frequency: coefficient}`` maps."""
        a = np.zeros(degree + 1)
        b = np.zeros(degree)
        for k, v in (cos_at or {}).items():
            a[k] = v
        for k, v in (sin_at or {}).items():
            b[k - 1] = v
        return cls(a, b)

    @classmethod
    def zero(cls) -> "TrigPoly":
        return cls(np.zeros(1))

    @property
    def degree(self) -> int:
        return self.cos.size - 1

    def sin_padded(self) -> np.ndarray:
        """b_0..b_nu with b_0 = 0, aligned with ``cos``."""
        return np.concatenate(([0.0], self.sin))

    def coefficient_l1(self) -> float:
        return float(np.abs(self.cos).sum() + np.abs(self.sin).sum())

    def __call__(self, t):
        return evaluate(self, t)

    def __add__(self, other: "TrigPoly") -> "TrigPoly":
        nu = max(self.degree, other.degree)
        a = np.zeros(nu + 1)
        b = np.zeros(nu)
        a[: self.cos.size] += self.cos
        a[: other.cos.size] += other.cos
        b[: self.sin.size] += self.sin
        b[: other.sin.size] += other.sin
        return TrigPoly(a, b)

    def __neg__(self) -> "TrigPoly":
        return TrigPoly(-self.cos, -self.sin)

    def __sub__(self, other: "TrigPoly") -> "TrigPoly":
        return self + (-other)

    def scale(self, factor: float) -> "TrigPoly":
        return TrigPoly(self.cos * factor, self.sin * factor)

    def fourier_coefficients(self, kmax: int):
        """Exact (a_0..a_kmax, b_0..b_kmax) with b_0 = 0."""
        a = np.zeros(kmax + 1)
        b = np.zeros(kmax + 1)
        m = min(kmax, self.degree)
        a[: m + 1] = self.cos[: m + 1]
        b[1 : m + 1] = self.sin[:m]
        return a, b

    def equals(self, other: "TrigPoly", rtol: float = 0.0) -> bool:
        if self.degree != other.degree:
            return False
        scale = max(self.coefficient_l1(), other.coefficient_l1(), 1e-300)
        diff = np.abs(self.cos - other.cos).max(initial=0.0)
        diff = max(diff, np.abs(self.sin - other.sin).max(initial=0.0))
        return diff <= rtol * scale

    def to_dict(self) -> dict:
        # repr() of a float is the shortest string that round-trips exactly
        return {
            "degree": self.degree,
            "cos": [repr(float(x)) for x in self.cos],
            "sin": [repr(float(x)) for x in self.sin],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TrigPoly":
        p = cls([float(x) for x in data["cos"]], [float(x) for x in data["sin"]])
        if p.degree != int(data["degree"]):
            raise ValueError("degree field does not match coefficient vectors")
        return p


def _exact_phase_trig(t: np.ndarray, k: np.ndarray):
    """cos(k t), sin(k t) for an outer grid, without the eps*k*t phase error.

    t is split as t_hi + t_lo with t_hi carrying 24 mantissa bits, so k*t_hi
    is an exact double for k < 2^29 and k*t_lo is tiny.
    """
    t_hi = t.astype(np.float32).astype(np.float64)
    t_lo = t - t_hi
    big = np.multiply.outer(t_hi, k)
    small = np.multiply.outer(t_lo, k)
    cb, sb = np.cos(big), np.sin(big)
    cs, ss = np.cos(small), np.sin(small)
    return cb * cs - sb * ss, sb * cs + cb * ss


def evaluate(p: TrigPoly, t):
    """Evaluate ``p`` at scalar or array ``t`` (radians)."""
    t_arr = np.asarray(t, dtype=np.float64)
    flat = t_arr.reshape(-1)
    out = np.full(flat.shape, p.cos[0])
    nu = p.degree
    if nu > 0:
        k = np.arange(1, nu + 1, dtype=np.float64)
        rows = max(1, _CHUNK_ELEMENTS // nu)
        for s in range(0, flat.size, rows):
            c, sn = _exact_phase_trig(flat[s : s + rows], k)
            out[s : s + rows] += c @ p.cos[1:] + sn @ p.sin
    if t_arr.ndim == 0:
        return float(out[0])
    return out.reshape(t_arr.shape)


def eval_uniform(p: TrigPoly, size: int, shift: float = 0.0) -> np.ndarray:
    """Values of ``p`` at shift + 2*pi*r/size, r = 0..size-1, via one FFT."""
    if size <= p.degree:
        raise ValueError("grid too coarse for the polynomial degree")
    k = np.arange(p.degree + 1)
    coeffs = (p.cos - 1j * p.sin_padded()) * np.exp(1j * k * shift)
    if 2 * p.degree < size:
        # real output: half-spectrum transform, half the memory
        half = np.zeros(size // 2 + 1, dtype=np.complex128)
        half[: p.degree + 1] = coeffs * (size / 2)
        half[0] = coeffs[0] * size
        return scipy.fft.irfft(half, n=size, workers=fft_workers())
    spec = np.zeros(size, dtype=np.complex128)
    spec[: p.degree + 1] = coeffs
    return size * scipy.fft.ifft(spec, workers=fft_workers()).real


def certification_grid(degree: int) -> np.ndarray:
    """The 4L sample points t_r = (2r-1)pi/(4L), L = 32*degree."""
    L = GRID_OVERSAMPLING * max(degree, 1)
    r = np.arange(1, 4 * L + 1)
    return (2 * r - 1) * math.pi / (4 * L)


def eval_certification_grid(p: TrigPoly, degree: Optional[int] = None) -> np.ndarray:
    """Values on :func:`certification_grid` (``degree`` defaults to p's)."""
    L = GRID_OVERSAMPLING * max(degree if degree is not None else p.degree, 1)
    size = 4 * L
    return eval_uniform(p, size, shift=math.pi / size)


@dataclass(frozen=True)
class SupNormCert:
    grid_size: int
    grid_max: float
    upper_bound: float
    lower_bound: float
    argmax_t: float

    def contains(self, value: float, rtol: float = 0.0) -> bool:
        return self.lower_bound * (1 - rtol) <= value <= self.upper_bound * (1 + rtol)


def fast_degree(degree: int) -> int:
    """Smallest degree >= ``degree`` whose certification grid has a fast FFT length.

    A polynomial of degree nu also has degree at most any nu' >= nu, so the
    finer grid for nu' certifies it just as well.
    """
    return scipy.fft.next_fast_len(max(degree, 1))


def certified_sup_norm(p: TrigPoly) -> SupNormCert:
    """Bracket ``max|p|`` between the grid max and grid max / cos(pi/64)."""
    nu = fast_degree(p.degree)
    values = np.abs(eval_certification_grid(p, nu))
    i = int(np.argmax(values))
    gmax = float(values[i])
    grid = 4 * GRID_OVERSAMPLING * nu
    t = (2 * (i + 1) - 1) * math.pi / grid
    return SupNormCert(grid, gmax, gmax * RIESZ_FACTOR, gmax, t)


def derivative(p: TrigPoly) -> TrigPoly:
    k = np.arange(1, p.degree + 1, dtype=np.float64)
    a = np.concatenate(([0.0], k * p.sin))
    b = -k * p.cos[1:]
    return TrigPoly(a, b)


class PeriodicFunction:
    """A continuous 2*pi-periodic function.

    ``func`` evaluates pointwise (vectorised); ``coefficients`` optionally
    returns exact Fourier data ``(a[0..kmax], b[0..kmax])`` with b[0] = 0.
    """

    def __init__(
        self,
        func: Callable[[np.ndarray], np.ndarray],
        coefficients: Optional[Callable[[int], tuple]] = None,
    ):
        self._func = func
        self._coefficients = coefficients

    def __call__(self, t):
        return self._func(t)

    @property
    def has_exact_coefficients(self) -> bool:
        return self._coefficients is not None

    def fourier_coefficients(self, kmax: int):
        if self._coefficients is None:
            raise ValueError("no exact Fourier coefficients; request quadrature explicitly")
        return self._coefficients(kmax)


def _has_exact(f) -> bool:
    if isinstance(f, PeriodicFunction):
        return f.has_exact_coefficients
    return hasattr(f, "fourier_coefficients")


def quadrature_coefficients(f, kmax: int, nodes: int):
    """Trapezoid-rule Fourier coefficients with ``nodes`` equispaced samples."""
    if nodes <= 2 * kmax:
        raise ValueError("need more than 2*kmax quadrature nodes")
    t = 2 * math.pi * np.arange(nodes) / nodes
    F = scipy.fft.rfft(np.asarray(f(t), dtype=np.float64), workers=fft_workers())
    a = 2.0 * F.real[: kmax + 1] / nodes
    b = -2.0 * F.imag[: kmax + 1] / nodes
    a[0] /= 2.0
    b[0] = 0.0
    return a, b


def _coefficients(f, kmax: int, quadrature: bool, nodes: Optional[int], tol: float):
    if not quadrature:
        if not _has_exact(f):
            raise ValueError("no exact Fourier coefficients; pass quadrature=True")
        return f.fourier_coefficients(kmax)
    nodes = nodes or max(4096, 8 * (kmax + 1))
    a1, b1 = quadrature_coefficients(f, kmax, nodes)
    a2, b2 = quadrature_coefficients(f, kmax, 2 * nodes)
    scale = max(1.0, float(np.abs(a2).max()), float(np.abs(b2).max()))
    err = max(float(np.abs(a1 - a2).max()), float(np.abs(b1 - b2).max()))
    if err > tol * scale:
        raise QuadratureError(
            f"quadrature with {nodes} nodes reached {err:.3e}, above tolerance {tol * scale:.3e}"
        )
    return a2, b2


def partial_sum(f, n: int, quadrature: bool = False, nodes: Optional[int] = None,
                tol: float = 1e-10) -> TrigPoly:
    """Degree-n Fourier truncation S_n(f)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    a, b = _coefficients(f, n, quadrature, nodes, tol)
    return TrigPoly(a[: n + 1], b[1 : n + 1])


def vallee_poussin_weights(n: int) -> np.ndarray:
    """Weight of frequency k (k = 0..2n-1) in (1/n) sum_{j=n}^{2n-1} S_j."""
    k = np.arange(2 * n)
    return np.minimum(1.0, (2 * n - k) / n)


def vallee_poussin(f, n: int, quadrature: bool = False, nodes: Optional[int] = None,
                   tol: float = 1e-10) -> TrigPoly:
    """De la Vallee Poussin mean V_n(f) of degree at most 2n-1."""
    if n < 1:
        raise ValueError("n must be positive")
    a, b = _coefficients(f, 2 * n - 1, quadrature, nodes, tol)
    w = vallee_poussin_weights(n)
    # weights are exactly 1.0 for k <= n, so V_n(f) = f at coefficient level
    return TrigPoly(a[: 2 * n] * w, (b[: 2 * n] * w)[1:])


def jackson_bound(omega_at: float) -> float:
    """Upper bound on E_n(f) given omega_at = omega(f, pi/(n+1))."""
    if omega_at < 0 or math.isnan(omega_at):
        raise ValueError("modulus of continuity must be nonnegative")
    return float(omega_at)


def locate_extremum(p: TrigPoly, t0: float, halfwidth: Optional[float] = None) -> float:
    """Refine a near-maximiser of |p| to a critical point of p."""
    nu = max(p.degree, 1)
    h = halfwidth if halfwidth is not None else math.pi / (32 * nu)
    res = minimize_scalar(lambda s: -abs(evaluate(p, s)), bounds=(t0 - h, t0 + h),
                          method="bounded", options={"xatol": 1e-13})
    t = float(res.x)
    d1, d2 = derivative(p), derivative(derivative(p))
    for _ in range(8):
        g, gg = evaluate(d1, t), evaluate(d2, t)
        if gg == 0.0:
            break
        step = g / gg
        if abs(step) > h:
            break
        t -= step
        if abs(step) < 1e-16 * max(1.0, abs(t)):
            break
    if abs(evaluate(p, t)) < abs(evaluate(p, float(res.x))):
        t = float(res.x)
    return t


@dataclass(frozen=True)
class RieszEnvelope:
    """t -> |p(t0)| cos(nu (t - t0)) on |t - t0| <= pi/(2 nu), zero elsewhere."""

    poly: TrigPoly
    t0: float
    amplitude: float
    nu: int
    precondition_ok: bool

    def __call__(self, t):
        d = np.remainder(np.asarray(t, dtype=np.float64) - self.t0 + math.pi, 2 * math.pi) - math.pi
        inside = np.abs(d) <= math.pi / (2 * self.nu)
        return np.where(inside, self.amplitude * np.cos(self.nu * d), 0.0)

    def audit(self, points: int = 10_000, tol: Optional[float] = None) -> dict:
        """Sample both sides of t0 and count |p| < envelope - tol."""
        if tol is None:
            tol = 1e-9 * self.amplitude
        half = math.pi / (2 * self.nu)
        t = self.t0 + np.linspace(-half, half, points)
        gap = np.abs(evaluate(self.poly, t)) - self(t)
        bad = gap < -tol
        return {
            "points": points,
            "violations": int(bad.sum()),
            "max_violation": float(max(0.0, -gap.min())),
            "tolerance": tol,
            "precondition_ok": self.precondition_ok,
        }


def riesz_lower_envelope(p: TrigPoly, t0: float) -> RieszEnvelope:
    """Lower envelope of |p| around a global extremum t0.

    The precondition |p(t0)| = ||p|| is checked against the certified
    bracket: it is flagged when |p(t0)| falls below grid_max * cos(pi/64).
    """
    nu = max(p.degree, 1)
    amp = abs(evaluate(p, t0))
    cert = certified_sup_norm(p)
    ok = amp >= cert.lower_bound / RIESZ_FACTOR
    return RieszEnvelope(p, float(t0), amp, nu, bool(ok))


def write_grid_csv(path, t: Sequence[float], values: Sequence[float]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "value"])
        for x, y in zip(t, values):
            w.writerow([f"{x:.17g}", f"{y:.17g}"])


def read_grid_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    return np.array([float(r[0]) for r in rows]), np.array([float(r[1]) for r in rows])

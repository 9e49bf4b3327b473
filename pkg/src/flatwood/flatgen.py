"""End-to-end construction of a degree-4n Littlewood polynomial.

Stages, each a pure function of the previous stage outputs:

1. cosine: the tiled Rudin-Shapiro cosine polynomial c(t) = T(2t) and the
   collection of lattice intervals where |c| is small;
2. coloring: a symmetric +-1 coloring of those intervals, chosen by the
   vector-balancing solver so that the odd sine coefficients of the bump
   target G stay small;
3. sine: the de la Vallee Poussin mean of G rounded to a +-1 odd sine
   polynomial s_o by a second balancing run over a 32n-point grid;
4. even sine: the Rudin-Shapiro prefix filling the even sine frequencies
   that c leaves free;
5. assembly: the coefficient vector with P(e^{it}) e^{-2int} =
   (-1 + 2c(t)) + 2i (s_o(t) + s_e(t)).

:func:`analyze` then measures |P| on a certification grid and runs the
bound chain with every constant replaced by its measured value.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from flatwood.discrepancy import (
    ColoringResult,
    OddSineGrid,
    PartialColoringInstance,
    check_entropy,
    solve,
)
from flatwood.intervals import (
    Classification,
    IntervalCollection,
    SymmetricColoring,
    TargetFunction,
    classify,
    orbit_sine_matrix,
    validate,
    zero_count_bound,
)
from flatwood.rudin_shapiro import (
    DESK_WINDOW,
    ASYMPTOTIC_WINDOW,
    FlatCosine,
    WindowError,
    build_cosine,
    minimal_feasible_n,
    rs_prefix,
)
from flatwood.trigcore import (
    GRID_OVERSAMPLING,
    RIESZ_FACTOR,
    TrigPoly,
    certified_sup_norm,
    eval_uniform,
    evaluate,
    fast_degree,
    vallee_poussin,
    vallee_poussin_weights,
)

SCHEMA_VERSION = 1
DEFAULT_K = 2.0**9
MAX_PIPELINE_N = 1 << 22
ASSERTED_PROPERTIES = ("a", "b", "d", "e")


class PipelineError(RuntimeError):
    """An asserted stage check failed."""


class AssemblyError(PipelineError):
    pass


@dataclass(frozen=True)
class Tolerances:
    identity: float = 1e-8        # times sqrt(n), evaluation identity residual
    vp_slack: float = 1e-6        # times K sqrt(n), approximation chain slack
    chain_rtol: float = 1e-9      # relative slack on measured bound-chain rows
    identity_points: int = 1000


@dataclass(frozen=True)
class PipelineConfig:
    n: int
    gamma_window: tuple = DESK_WINDOW
    K: float = DEFAULT_K
    profile: str = "desk"
    seed: int = 7
    max_restarts: int = 20
    rho: float = 1e-3
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        if self.profile not in ("desk", "paper"):
            raise ValueError("profile must be 'desk' or 'paper'")
        if self.n <= 0 or self.n % 10:
            raise ValueError("n must be a positive multiple of 10")
        lo, hi = (Fraction(g) for g in self.gamma_window)
        object.__setattr__(self, "gamma_window", (lo, hi))
        if lo <= 0 or hi / lo < 8:
            raise ValueError("gamma window needs 0 < lo and hi/lo >= 8")
        if not self.K > 0:
            raise ValueError("K must be positive")
        if not 0 < self.rho < 1:
            raise ValueError("rho must lie in (0, 1)")

    @classmethod
    def for_profile(cls, n: int, profile: str = "desk", **kw) -> "PipelineConfig":
        window = ASYMPTOTIC_WINDOW if profile == "paper" else DESK_WINDOW
        kw.setdefault("gamma_window", window)
        return cls(n=n, profile=profile, **kw)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["gamma_window"] = [str(g) for g in self.gamma_window]
        return d


@dataclass(frozen=True, eq=False)
class LittlewoodPoly:
    coeffs: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.coeffs)
        if raw.ndim != 1 or raw.size == 0:
            raise ValueError("need a nonempty coefficient vector")
        if not np.all((raw == 1) | (raw == -1)):
            raise ValueError("Littlewood coefficients must be +-1")
        c = raw.astype(np.int8)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    @classmethod
    def from_string(cls, s: str) -> "LittlewoodPoly":
        table = {"+": 1, "-": -1, "−": -1}
        try:
            return cls(np.array([table[ch] for ch in s.strip()], dtype=np.int8))
        except KeyError as exc:
            raise ValueError(f"bad coefficient character {exc.args[0]!r}") from None

    def to_string(self) -> str:
        return "".join("+" if a > 0 else "-" for a in self.coeffs)

    def __eq__(self, other) -> bool:
        return isinstance(other, LittlewoodPoly) and np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self) -> int:
        return hash(self.coeffs.tobytes())

    def __call__(self, z):
        return np.polynomial.polynomial.polyval(z, self.coeffs.astype(np.float64))

    def values_on_grid(self, size: int, shift: float = 0.0) -> np.ndarray:
        """P(e^{it}) at t = shift + 2 pi r / size."""
        from flatwood.rudin_shapiro import poly_values_on_roots
        return poly_values_on_roots(self.coeffs, size, shift)


def fallback_poly(n: int) -> LittlewoodPoly:
    """1 - z - z^2 - ... - z^{4n}, zero-free on the circle."""
    c = -np.ones(4 * n + 1, dtype=np.int8)
    c[0] = 1
    return LittlewoodPoly(c)


# --- stage 1 ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CosineStage:
    cosine: FlatCosine
    U: TrigPoly
    classification: Classification
    collection: IntervalCollection
    validation: dict
    report: dict


def asymptotic_threshold_log10(gamma, norm_U: float) -> float:
    """log10 of (0.005/400) (eta/(18 pi))^200 ||U|| with eta = 10 pi gamma."""
    eta = 10 * math.pi * float(gamma)
    return math.log10(0.005 / 400) + 200 * math.log10(eta / (18 * math.pi)) + math.log10(norm_U)


def cosine_stage(cfg: PipelineConfig) -> CosineStage:
    if cfg.n > MAX_PIPELINE_N:
        raise WindowError(f"n = {cfg.n} exceeds the in-memory limit {MAX_PIPELINE_N}")
    cos = build_cosine(cfg.n, cfg.gamma_window)
    U = cos.poly
    cert = certified_sup_norm(U)
    log_asym = asymptotic_threshold_log10(cos.gamma, cert.grid_max)
    threshold = max(cfg.rho * cert.grid_max, 10.0**log_asym)
    cl = classify(U, cfg.n, threshold, symmetric=True)
    coll = cl.bad
    val = validate(coll, cos.gamma)
    failed = [p for p in ASSERTED_PROPERTIES if not val[p]]
    if failed:
        raise PipelineError(f"interval collection fails properties {failed}: {val['witnesses']}")
    good_margin = float((cl.cell_min[cl.good] - cl.margin).min(initial=math.inf))
    report = {
        "n": cfg.n, "m": cos.m, "M": cos.M, "mu": cos.mu, "gamma": str(cos.gamma),
        "gamma_float": float(cos.gamma), "degree_U": U.degree,
        "nu_values_logged": {"two_mu": 2 * cos.mu, "gamma_n": float(cos.gamma * cfg.n)},
        "norm_c_grid": cert.grid_max, "norm_c_certified": cert.upper_bound,
        "sqrt_n": math.sqrt(cfg.n), "norm_c_le_sqrt_n": cert.upper_bound <= math.sqrt(cfg.n),
        "threshold": threshold, "threshold_rule": f"max(rho*||U||, asymptotic), rho={cfg.rho}",
        "asymptotic_threshold_log10": log_asym,
        "bernstein_margin": cl.margin, "good_cells": int(cl.good.size),
        "good_cell_min_minus_margin": good_margin,
        "intervals": len(coll), "orbits": coll.N,
        "zero_count_bound": zero_count_bound(U),
        "intervals_within_zero_count": len(coll) <= zero_count_bound(U),
        "validation": {k: val[k] for k in "abcdef"}, "validation_count": val["count"],
        "validation_witnesses": val["witnesses"],
    }
    if not report["norm_c_le_sqrt_n"] and cos.gamma <= Fraction(1, 36):
        raise PipelineError("certified ||c|| exceeds sqrt(n)")
    return CosineStage(cos, U, cl, coll, val, report)


# --- stage 2 ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ColoringStage:
    coloring: SymmetricColoring
    target: TargetFunction
    b_odd: np.ndarray            # b_{2k-1}(G), k = 1..n
    solver: Optional[ColoringResult]
    report: dict


def coloring_stage(stage: CosineStage, cfg: PipelineConfig) -> ColoringStage:
    coll = stage.collection
    n = cfg.n
    N = coll.N
    if N == 0:
        coloring = SymmetricColoring(coll, np.zeros(0, dtype=np.int64))
        target = TargetFunction(coloring, cfg.K)
        return ColoringStage(coloring, target, np.zeros(n), None,
                             {"N": 0, "B": 0.0, "all_satisfied": True})
    Y = orbit_sine_matrix(coll, cfg.K, n)
    c = np.full(n, 14.0 * math.sqrt(math.log(16 * n / N)))
    inst = PartialColoringInstance(Y, np.zeros(N), c)
    entropy, ok = check_entropy(inst)
    res = solve(inst, seed=cfg.seed, max_restarts=cfg.max_restarts)
    coloring = SymmetricColoring(coll, res.x.astype(np.int64))
    target = TargetFunction(coloring, cfg.K)
    b = Y @ res.x.astype(np.float64)
    report = {
        "N": N, "u": n, "v": N, "c_k": float(c[0]), "entropy_value": entropy, "entropy_budget": N / 16,
        "entropy_ok": ok, "B": float(np.abs(b).max()), "B_le_1": bool(np.abs(b).max() <= 1),
        "all_satisfied": res.all_satisfied, "solver": res.summary(),
        "symmetric": coloring.is_symmetric(),
        "max_y_inf": float(inst.constraints.row_inf_norms().max()),
        "asymptotic_y_bound": 16000 * cfg.K / math.sqrt(n),
    }
    return ColoringStage(coloring, target, b, res, report)


# --- stage 3 ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SineStage:
    s_o: TrigPoly
    vp: TrigPoly                 # V_n(G), full
    vp_clamped: TrigPoly         # odd sine part with coefficients clipped to [-1, 1]
    eps_tilde: np.ndarray
    solver: ColoringResult
    report: dict


def _odd_sine(coeffs: np.ndarray) -> TrigPoly:
    b = np.zeros(2 * coeffs.size)
    b[0::2] = coeffs
    return TrigPoly(np.zeros(1), b)


def sine_stage(col: ColoringStage, cfg: PipelineConfig) -> SineStage:
    n = cfg.n
    vp = vallee_poussin(col.target, n)
    w = vallee_poussin_weights(n)
    eps_tilde = w[1::2] * col.b_odd
    vp_odd = vp.sin[0::2] if vp.sin.size else np.zeros(0)
    vp_odd = np.pad(vp_odd, (0, n - vp_odd.size))
    route_gap = float(np.abs(vp_odd - eps_tilde).max(initial=0.0))
    clamp_coeff = float(np.maximum(np.abs(eps_tilde) - 1, 0).max(initial=0.0))
    x0 = np.clip(eps_tilde, -1.0, 1.0)
    L = GRID_OVERSAMPLING * n
    grid = OddSineGrid(n, L)
    c = np.full(L, 42.0 * math.sqrt(math.log(2)))
    inst = PartialColoringInstance(grid, x0, c)
    entropy, ok = check_entropy(inst)
    res = solve(inst, seed=cfg.seed + 1, max_restarts=cfg.max_restarts)
    s_o = _odd_sine(res.x.astype(np.float64))
    vp_clamped = _odd_sine(x0)

    defect_L = float(res.achieved.max(initial=0.0))
    diff = s_o - vp_clamped
    full = np.abs(eval_uniform(diff, 4 * L, shift=math.pi / (4 * L))) if diff.degree else np.zeros(1)
    defect_4L = float(full.max())
    sqrt_n = math.sqrt(n)
    report = {
        "L": L, "entropy_value": entropy, "entropy_budget": n / 16, "entropy_ok": ok,
        "c_r": float(c[0]), "bound_constant": 42 * math.sqrt(math.log(2)) + 30,
        "coefficient_route_gap": route_gap,
        "clamp_loss_coefficient": clamp_coeff, "clamped_count": int((np.abs(eps_tilde) > 1).sum()),
        "all_satisfied": res.all_satisfied, "solver": res.summary(),
        "defect_grid_L": defect_L, "defect_grid_4L": defect_4L,
        "quarter_grid_is_full_max": math.isclose(defect_L, defect_4L, rel_tol=1e-9, abs_tol=1e-9 * sqrt_n),
        "defect_lifted": defect_4L * RIESZ_FACTOR,
        "defect_le_65": defect_L <= 65 * sqrt_n, "lift_le_66": defect_4L * RIESZ_FACTOR <= 66 * sqrt_n,
    }
    if res.all_satisfied and not (report["defect_le_65"] and report["lift_le_66"]):
        raise PipelineError("rounding defect exceeds its bound despite a satisfied solver run")
    return SineStage(s_o, vp, vp_clamped, eps_tilde, res, report)


# --- stage 4 ------------------------------------------------------------------

def even_sine_stage(n: int, mu: int) -> TrigPoly:
    """sum_{k=mu}^{n} p_k sin(2kt) with p the Rudin-Shapiro prefix of length n+1."""
    if not 1 <= mu <= n:
        raise ValueError("need 1 <= mu <= n")
    p = rs_prefix(n + 1).coeffs
    b = np.zeros(2 * n)
    k = np.arange(mu, n + 1)
    b[2 * k - 1] = p[k]
    return TrigPoly(np.zeros(1), b)


# --- stage 5 ------------------------------------------------------------------

def assemble(cos: FlatCosine, s_o: TrigPoly, s_e: TrigPoly) -> LittlewoodPoly:
    n, mu = cos.n, cos.mu
    if int(cos.d[0]) != 1:
        raise AssemblyError("constant cosine coefficient must be +1")
    a = np.zeros(4 * n + 1, dtype=np.int64)
    filled = np.zeros(4 * n + 1, dtype=np.int64)
    centre = 2 * n

    def put(offset, plus, minus):
        a[centre + offset] = plus
        a[centre - offset] = minus
        filled[centre + offset] += 1
        filled[centre - offset] += 1

    a[centre] = 2 * int(cos.d[0]) - 1
    filled[centre] = 1
    so = np.rint(np.pad(s_o.sin, (0, max(0, 2 * n - s_o.sin.size)))).astype(np.int64)
    se = np.rint(np.pad(s_e.sin, (0, max(0, 2 * n - s_e.sin.size)))).astype(np.int64)
    if s_o.sin.size > 2 * n or s_e.sin.size > 2 * n:
        raise AssemblyError("sine parts exceed degree 2n")
    for o in range(1, 2 * n + 1):
        if o % 2:
            put(o, so[o - 1], -so[o - 1])
            if se[o - 1]:
                raise AssemblyError(f"even sine part has odd frequency {o}")
        elif o // 2 < mu:
            if se[o - 1] or so[o - 1]:
                raise AssemblyError(f"sine overlap with cosine support at frequency {o}")
            put(o, int(cos.d[o // 2]), int(cos.d[o // 2]))
        else:
            if so[o - 1]:
                raise AssemblyError(f"odd sine part has even frequency {o}")
            put(o, se[o - 1], -se[o - 1])
    if not np.all(filled[: centre] == 1) or not np.all(filled == 1):
        raise AssemblyError("coefficient slots not filled exactly once")
    if not np.all(np.abs(a) == 1):
        missing = np.nonzero(np.abs(a) != 1)[0][:10].tolist()
        raise AssemblyError(f"support gap at indices {missing}")
    return LittlewoodPoly(a)


def identity_residual(P: LittlewoodPoly, cos: FlatCosine, s_o: TrigPoly, s_e: TrigPoly,
                      points: int = 1000, seed: int = 0) -> float:
    """max |P(e^{it}) e^{-2int} - ((-1 + 2c) + 2i(s_o + s_e))| at random t."""
    n = cos.n
    t = np.random.default_rng(seed).uniform(0, 2 * math.pi, points)
    offsets = np.arange(-2 * n, 2 * n + 1)
    lhs = np.empty(points, dtype=np.complex128)
    coeffs = P.coeffs.astype(np.float64)
    for i in range(0, points, 64):
        tt = t[i : i + 64]
        lhs[i : i + 64] = np.exp(1j * np.multiply.outer(tt, offsets)) @ coeffs
    rhs = (-1 + 2 * evaluate(cos.poly, t)) + 2j * (evaluate(s_o, t) + evaluate(s_e, t))
    return float(np.abs(lhs - rhs).max())


def symmetry_report(P: LittlewoodPoly, mu: int) -> dict:
    """Exact integer checks of the two coefficient-symmetry regimes."""
    a = P.coeffs.astype(np.int64)
    d = a.size - 1
    centre = d // 2
    o = np.arange(1, centre + 1)
    plus, minus = a[centre + o], a[centre - o]
    anti = plus == -minus
    sym = plus == minus
    centre_zone = o <= 2 * mu - 1
    antisym_zone_ok = bool(np.all(anti[(~centre_zone) | (o % 2 == 1)]))
    parity = np.where(o % 2 == 0, plus == minus, plus == -minus)
    centre_ok = bool(np.all(parity[centre_zone]))
    even_sym = o[(o % 2 == 0) & sym]
    width = int(even_sym.max()) + 1 if even_sym.size else 1
    return {
        "m_n": 2 * mu - 1, "m_n_formula_two_mu": 2 * mu, "measured_centre_width": width,
        "antisymmetric_zone_verified": antisym_zone_ok, "centre_zone_verified": centre_ok,
        "centre_width_matches": width == 2 * mu - 1,
    }


# --- analysis -----------------------------------------------------------------

@dataclass
class FlatnessReport:
    degree: int
    n: Optional[int]
    m: Optional[int]
    mu: Optional[int]
    gamma: Optional[str]
    K: Optional[float]
    certified_max: float
    grid_max: float
    grid_min: float
    grid_size: int
    eta1_measured: float
    eta2_measured: float
    flat: bool
    component_norms: dict = field(default_factory=dict)
    symmetry: dict = field(default_factory=dict)
    bound_chain: list = field(default_factory=list)

    @property
    def chain_ok(self) -> bool:
        return all(r["pass"] for r in self.bound_chain if r["asserted"])

    def to_dict(self) -> dict:
        d = asdict(self)
        d["chain_ok"] = self.chain_ok
        return d


FLAT_ETA = 0.25  # eta1_measured at or above this counts as flat in reports


def chain_row(row_id: str, bound: float, measured: float, relation: str = "<=",
              asserted: bool = True, rtol: float = 0.0, note: str = "") -> dict:
    slack = rtol * max(abs(bound), abs(measured), 1.0)
    ok = measured <= bound + slack if relation == "<=" else measured >= bound - slack
    return {"id": row_id, "relation": relation, "bound": float(bound), "measured": float(measured),
            "pass": bool(ok), "asserted": bool(asserted), "note": note}


def _grid_stats(P: LittlewoodPoly):
    size = 4 * GRID_OVERSAMPLING * fast_degree(P.degree)
    shift = math.pi / size
    return np.abs(P.values_on_grid(size, shift)), size, shift


def analyze_poly(P: LittlewoodPoly) -> FlatnessReport:
    """Grid |P| statistics without pipeline context."""
    mod, size, _ = _grid_stats(P)
    gmax, gmin = float(mod.max()), float(mod.min())
    root = math.sqrt(max(P.degree, 1))
    cert = gmax * RIESZ_FACTOR
    chain = [chain_row("certified_max_bracket", cert, gmax, "<=", note="grid max <= certified max")]
    return FlatnessReport(P.degree, None, None, None, None, None, cert, gmax, gmin, size,
                          gmin / root, cert / root, gmin / root >= FLAT_ETA, bound_chain=chain)


@dataclass(frozen=True, eq=False)
class PipelineRun:
    config: PipelineConfig
    poly: LittlewoodPoly
    fallback: bool
    cosine: Optional[CosineStage] = None
    coloring: Optional[ColoringStage] = None
    sine: Optional[SineStage] = None
    s_e: Optional[TrigPoly] = None
    report: Optional[FlatnessReport] = None
    stages: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.report is None or self.report.chain_ok

    def to_dict(self, include_artifacts: bool = True) -> dict:
        out = {
            "schema_version": SCHEMA_VERSION, "fallback": self.fallback,
            "config": self.config.to_dict(), "degree": self.poly.degree,
            "coefficients": self.poly.coeffs.astype(int).tolist(),
            "coefficient_string": self.poly.to_string(),
            "stages": self.stages, "report": self.report.to_dict() if self.report else None,
            "ok": self.ok,
        }
        if include_artifacts and not self.fallback:
            out["artifacts"] = {
                "cosine_d": self.cosine.cosine.d.astype(int).tolist(),
                "intervals": self.cosine.collection.to_dict(),
                "coloring": self.coloring.coloring.to_dict(),
                "b_odd": [repr(float(x)) for x in self.coloring.b_odd],
                "eps_tilde": [repr(float(x)) for x in self.sine.eps_tilde],
                "s_o": self.sine.solver.x.astype(int).tolist(),
                "s_e": np.rint(self.s_e.sin[1::2]).astype(int).tolist(),
            }
        return out


def analyze(P: LittlewoodPoly, cfg: PipelineConfig, cos: CosineStage, col: ColoringStage,
            sine: SineStage, s_e: TrigPoly) -> FlatnessReport:
    n, K = cfg.n, cfg.K
    root_n = math.sqrt(n)
    tol = cfg.tolerances
    mod, size, shift = _grid_stats(P)
    gmax, gmin = float(mod.max()), float(mod.min())
    certified = gmax * RIESZ_FACTOR

    def on_grid(p: TrigPoly) -> np.ndarray:
        return eval_uniform(p, size, shift)

    c_vals = on_grid(cos.U)
    so_vals = on_grid(sine.s_o)
    se_vals = on_grid(s_e)
    vp_vals = on_grid(sine.vp)
    vpc_vals = on_grid(sine.vp_clamped)
    g_vals = col.target.sample_uniform(size, shift)

    unit = cos.collection.unit
    t = shift + 2 * math.pi * np.arange(size) / size
    cell = np.minimum((t // unit).astype(np.int64), cos.collection.period - 1)
    bad_cell = np.ones(cos.collection.period, dtype=bool)
    bad_cell[cos.classification.good] = False
    inside = bad_cell[cell]

    def cert(vals):
        return float(np.abs(vals).max(initial=0.0)) * RIESZ_FACTOR

    norm_c, norm_so, norm_se = cert(c_vals), cert(so_vals), cert(se_vals)
    norm_vp = cert(vp_vals)
    clamp_sup = cert(vp_vals - vpc_vals)
    lift = sine.report["defect_lifted"]
    amp = K * root_n
    approx = float(np.abs(vp_vals - g_vals).max())

    def masked_min(vals, mask):
        return float(np.abs(vals[mask]).min()) if mask.any() else math.inf

    vp_min_in = masked_min(vp_vals, inside)
    so_min_in = masked_min(so_vals, inside)
    P_min_in = masked_min(mod, inside)
    P_min_out = float(mod[~inside].min()) if (~inside).any() else math.inf
    r_min_out = masked_min(-1 + 2 * c_vals, ~inside)
    solved = bool(col.report["all_satisfied"] and sine.report["all_satisfied"])
    rt = tol.chain_rtol

    chain = [
        chain_row("cosine_sup", root_n, norm_c, note="certified ||c|| <= sqrt(n)"),
        chain_row("cosine_off_intervals", cos.classification.threshold,
                  masked_min(c_vals, ~inside), ">=", rtol=rt, note="|c| >= threshold off the intervals"),
        chain_row("coloring_guarantee", 0, sum(not s for s in col.solver.satisfied) if col.solver else 0,
                  "<=", note="violated balancing constraints"),
        chain_row("coloring_B_le_1", 1.0, col.report["B"], asserted=False,
                  note="max |b_{2k-1}(G)| <= 1 (needs the asymptotic window)"),
        chain_row("vp_approximation", 4 * amp / 5 + tol.vp_slack * amp, approx,
                  note="dense-grid max |V_n(G) - G| <= 4K sqrt(n)/5"),
        chain_row("vp_lower_on_intervals", amp / 5 - tol.vp_slack * amp, vp_min_in, ">=",
                  note="|V_n(G)| >= K sqrt(n)/5 on the intervals"),
        chain_row("vp_upper", 2 * amp + tol.vp_slack * amp, float(np.abs(vp_vals).max()),
                  note="|V_n(G)| <= 2K sqrt(n)"),
        chain_row("rounding_grid", 65 * root_n, sine.report["defect_grid_L"], asserted=solved,
                  note="max_r |s_o - clamped V_n(G)| on t_r, r <= L"),
        chain_row("rounding_lift", 66 * root_n, lift, asserted=solved, note="lifted to all t"),
        chain_row("so_lower_on_intervals", vp_min_in - lift - clamp_sup, so_min_in, ">=",
                  asserted=solved, rtol=rt, note="|s_o| >= |V_n(G)| - defect - clamp sup"),
        chain_row("so_upper", norm_vp + lift + clamp_sup, float(np.abs(so_vals).max()),
                  asserted=solved, rtol=rt, note="|s_o| <= ||V_n(G)|| + defect + clamp sup"),
        chain_row("even_sine_sup", 6 * root_n, norm_se, asserted=cfg.profile == "desk",
                  note="certified ||s_e|| <= 6 sqrt(n)"),
        chain_row("P_lower_on_intervals", 2 * (amp / 5 - lift - clamp_sup) - 2 * norm_se, P_min_in,
                  ">=", asserted=solved, rtol=rt, note="|P| >= 2|s_o| - 2|s_e|"),
        chain_row("P_lower_off_intervals", r_min_out, P_min_out, ">=", rtol=rt,
                  note="|P| >= |-1 + 2c| off the intervals"),
        chain_row("P_off_intervals_threshold", 2 * cos.classification.threshold - 1, r_min_out, ">=",
                  rtol=rt, note="|-1 + 2c| >= 2 threshold - 1"),
        chain_row("P_upper", 1 + 2 * norm_c + 2 * norm_so + 2 * norm_se, gmax, rtol=rt,
                  note="|P| <= 1 + 2||c|| + 2||s_o|| + 2||s_e||"),
    ]
    comps = {
        "norm_c": norm_c, "norm_s_o": norm_so, "norm_s_e": norm_se, "norm_vp": norm_vp,
        "norm_s_e_prefix_bound": 5 * math.sqrt(n + 1) + 5 * math.sqrt(cos.cosine.mu),
        "B": col.report["B"], "rounding_defect": sine.report["defect_grid_L"], "rounding_lifted": lift,
        "clamp_loss_coefficient": sine.report["clamp_loss_coefficient"], "clamp_sup": clamp_sup,
        "vp_approximation": approx, "vp_min_on_intervals": vp_min_in,
        "s_o_min_on_intervals": so_min_in, "P_min_on_intervals": P_min_in,
        "P_min_off_intervals": P_min_out, "R_min_off_intervals": r_min_out,
        "grid_fraction_in_intervals": float(inside.mean()),
    }
    root = math.sqrt(P.degree)
    return FlatnessReport(
        P.degree, n, cos.cosine.m, cos.cosine.mu, str(cos.cosine.gamma), K, certified, gmax, gmin,
        size, gmin / root, certified / root, gmin / root >= FLAT_ETA, comps,
        symmetry_report(P, cos.cosine.mu), chain)


# --- constants with the asymptotic window -------------------------------------

def asymptotic_constant_chain(K: int = 2**9) -> list[dict]:
    """Rational bookkeeping of the final constants, in units of sqrt(n).

    Inputs are the component bounds ||c|| <= 1, |V_n(G)| >= K/5 on the
    intervals, ||V_n(G)|| <= 2K, rounding defect 66, ||s_e|| <= 6.
    """
    K = Fraction(K)
    rows = []

    def row(row_id, lhs, rhs, relation, stated=None):
        ok = {"==": lhs == rhs, "<=": lhs <= rhs, ">=": lhs >= rhs}[relation]
        r = {"id": row_id, "lhs": str(lhs), "rhs": str(rhs), "relation": relation, "pass": ok}
        if stated is not None:
            r["stated"] = str(stated)
        rows.append(r)
        return ok

    lower_vp = K / 5
    row("vp_lower", lower_vp, Fraction(102), ">=")
    row("so_lower", Fraction(102) - 66, Fraction(36), "==")
    row("so_upper", 2 * K + 66, Fraction(1090), "<=")
    row("P_lower_on_intervals", 2 * Fraction(36) - 2 * Fraction(6), Fraction(60), "==")
    total = 2 * Fraction(1) + 2 * Fraction(1090) + 2 * Fraction(6)
    row("P_upper_sum", total, Fraction(2194), "==")
    row("P_upper_stated_bound", total, Fraction(2196), "<=")
    row("P_upper_stated_equality", total, Fraction(2196), "==", stated="1 + 2196 sqrt(n)")
    return rows


def coloring_constant_check(K: float = 2.0**9, window=ASYMPTOTIC_WINDOW) -> list[dict]:
    """(14 sqrt(log(16/gamma)) + 30) sqrt(gamma) 16000 K <= 1 across the window."""
    out = []
    for g in window:
        g = float(Fraction(g))
        val = (14 * math.sqrt(math.log(16 / g)) + 30) * math.sqrt(g) * 16000 * K
        out.append({"gamma": g, "value": val, "pass": val <= 1})
    return out


# --- driver -------------------------------------------------------------------

def run_pipeline(cfg: PipelineConfig) -> PipelineRun:
    """All stages; falls back to 1 - z - ... - z^{4n} below the window."""
    if cfg.profile == "paper":
        need = minimal_feasible_n(cfg.gamma_window)
        if cfg.n < need or cfg.n > MAX_PIPELINE_N:
            raise WindowError(
                f"profile 'paper' needs n >= {need} (~2^{math.log2(need):.2f}); "
                "this is far beyond desk memory, use the desk profile")
    try:
        need = minimal_feasible_n(cfg.gamma_window)
    except WindowError:
        need = None
    if need is not None and cfg.n < need:
        P = fallback_poly(cfg.n)
        rep = analyze_poly(P)
        return PipelineRun(cfg, P, True, report=rep,
                           stages={"fallback_reason": f"n < smallest window-feasible n = {need}"})
    cos = cosine_stage(cfg)
    col = coloring_stage(cos, cfg)
    sine = sine_stage(col, cfg)
    s_e = even_sine_stage(cfg.n, cos.cosine.mu)
    P = assemble(cos.cosine, sine.s_o, s_e)
    resid = identity_residual(P, cos.cosine, sine.s_o, s_e, cfg.tolerances.identity_points)
    if resid > cfg.tolerances.identity * math.sqrt(cfg.n):
        raise AssemblyError(f"evaluation identity residual {resid:.3e} above tolerance")
    rep = analyze(P, cfg, cos, col, sine, s_e)
    stages = {"cosine": cos.report, "coloring": col.report, "sine": sine.report,
              "assembly": {"identity_residual": resid,
                           "identity_tolerance": cfg.tolerances.identity * math.sqrt(cfg.n)}}
    return PipelineRun(cfg, P, False, cos, col, sine, s_e, rep, stages)

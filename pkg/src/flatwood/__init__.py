"""Constructive flat Littlewood polynomials: Rudin-Shapiro cosine stage,
discrepancy-driven sine stage, coefficient assembly and audits."""

from flatwood.trigcore import TrigPoly, SupNormCert, PeriodicFunction
from flatwood.rudin_shapiro import RSPair, RSPrefix, FlatCosine, rs_pair, rs_prefix, build_T, build_cosine
from flatwood.intervals import IntervalCollection, SymmetricColoring, BumpFunction, TargetFunction
from flatwood.discrepancy import PartialColoringInstance, ColoringResult, solve, solve_exhaustive, check_entropy
from flatwood.flatgen import SCHEMA_VERSION, PipelineConfig, LittlewoodPoly, FlatnessReport, run_pipeline
from flatwood.littlewood_lab import SearchResult, enumerate_flattest, self_reciprocal_zero_check

__version__ = "0.1.0"

__all__ = [
    "TrigPoly", "SupNormCert", "PeriodicFunction",
    "RSPair", "RSPrefix", "FlatCosine", "rs_pair", "rs_prefix", "build_T", "build_cosine",
    "IntervalCollection", "SymmetricColoring", "BumpFunction", "TargetFunction",
    "PartialColoringInstance", "ColoringResult", "solve", "solve_exhaustive", "check_entropy",
    "PipelineConfig", "LittlewoodPoly", "FlatnessReport", "run_pipeline", "SCHEMA_VERSION",
    "SearchResult", "enumerate_flattest", "self_reciprocal_zero_check",
]

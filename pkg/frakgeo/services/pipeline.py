"""Run the full geometry pipeline for a job and grade every identity it checks."""

from __future__ import annotations

import math
import time
from datetime import datetime, timezone
from functools import cached_property
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import ValidationError

from ..core.errors import ConfigError, FrakgeoError, RegularityError
from ..core.logging import get_logger
from ..models.fields import ChartSpec, FractionalOrder, Lattice, PowerField
from ..models.geometry import Lagrangian
from ..models.schema import CheckRecord, JobConfig, ReportMetadata, Timing, VerificationReport
from .classical import classical_geometry
from .dconnection import (
    canonical_dconnection,
    metric_derivatives,
    sasaki_metric,
    structure_equation_residuals,
    torsion_forms,
)
from .exterior import form_matrix
from .kahler import build_almost_complex, cartan_forms, closure_checks, compatibility_check
from .lagrange import grid_path_spray, hessian_metric, homogeneity_residual, semi_spray
from .nconnection import adapted_frame, canonical_nconnection, commutator_residual, duality_residual, nonholonomy

logger = get_logger("pipeline")


def build_chart(config: JobConfig) -> ChartSpec:
    n = config.dimension
    return ChartSpec(n, tuple(config.terminals.x or ()), tuple(config.terminals.y or ()))


def build_lattice(config: JobConfig, chart: ChartSpec) -> Lattice:
    return Lattice(chart, tuple(a.upper_bound for a in config.lattice), tuple(a.points for a in config.lattice))


def build_lagrangian(config: JobConfig, chart: ChartSpec, alpha: float) -> Lagrangian:
    L = PowerField.from_terms(chart, [(m.coeff, list(m.x_exponents) + list(m.y_exponents)) for m in config.lagrangian])
    return Lagrangian(chart, FractionalOrder(alpha), L, finsler=config.finsler)


def with_overrides(config: JobConfig, *, alpha: Optional[float] = None, seed: Optional[int] = None) -> JobConfig:
    """Apply command-line overrides and validate the result again."""
    data = config.model_dump()
    if alpha is not None:
        data["alpha"] = alpha
    if seed is not None:
        data["seed"] = seed
    try:
        return JobConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


class _Stages:
    """Pipeline objects for one order, built on first use: metric, spray, N, frame, D, forms."""

    def __init__(self, lag: Lagrangian, lattice: Lattice, seed: int):
        self.lag = lag
        self.lattice = lattice
        self.seed = seed

    @cached_property
    def metric(self):
        return hessian_metric(self.lag, self.lattice)

    @property
    def mask(self) -> np.ndarray:
        return self.metric.mask

    @cached_property
    def spray(self):
        return semi_spray(self.lag, self.metric)

    @cached_property
    def nconnection(self):
        return canonical_nconnection(self.spray, self.lag.alpha)

    @cached_property
    def frame(self):
        return adapted_frame(self.nconnection)

    @cached_property
    def nonholonomy(self):
        return nonholonomy(self.frame)

    @cached_property
    def eg(self):
        return metric_derivatives(self.metric, self.frame)

    @cached_property
    def dconnection(self):
        return canonical_dconnection(self.metric, self.frame, self.eg)

    @cached_property
    def sasaki(self):
        return sasaki_metric(self.metric, self.frame)

    @cached_property
    def J(self):
        return build_almost_complex(self.frame)

    @cached_property
    def torsion(self):
        return torsion_forms(self.dconnection, self.frame, self.nonholonomy)

    @cached_property
    def symplectic(self):
        return cartan_forms(self.lag, self.metric, self.frame, self.J, seed=self.seed)

    @cached_property
    def oracle(self) -> Dict[str, np.ndarray]:
        return classical_geometry(self.lag).arrays(self.lattice)

    def oracle_gap(self, name: str, values: np.ndarray) -> float:
        return float(np.max(np.abs(values - self.oracle[name])[self.mask]))


def _worst(*values: float) -> float:
    return float(np.max(values))


# (aspect, tolerance kind, soft at fractional order)
Finding = Tuple[str, float, str, bool]


def _hessian(s: _Stages) -> List[Finding]:
    out = [("inverse", s.metric.inverse_residual(), "symbolic", False)]
    if s.lag.alpha.is_integer:
        out.append(("oracle", s.oracle_gap("g", s.metric.values), "grid", False))
    return out


def _spray(s: _Stages) -> List[Finding]:
    dual = grid_path_spray(s.lag, s.lattice, scheme=s.nconnection.scheme)
    out = [("dual_path", float(np.max(np.abs(s.spray.values - dual)[s.mask])), "grid", True)]
    if s.lag.alpha.is_integer:
        out.append(("oracle", s.oracle_gap("G", s.spray.values), "grid", False))
    return out


def _nconnection(s: _Stages) -> List[Finding]:
    out = [
        ("duality", duality_residual(s.frame, s.mask), "symbolic", False),
        ("commutator", commutator_residual(s.frame, s.nonholonomy, mask=s.mask), "grid", True),
    ]
    if s.lag.alpha.is_integer:
        gap = _worst(s.oracle_gap("N", s.nconnection.N), s.oracle_gap("Omega", s.nonholonomy.Omega))
        out.append(("oracle", gap, "grid", False))
    return out


def _dconnection(s: _Stages) -> List[Finding]:
    D = s.dconnection
    sym = _worst(
        float(np.max(np.abs(D.Lhat - np.swapaxes(D.Lhat, -1, -2))[s.mask])),
        float(np.max(np.abs(D.Chat - np.swapaxes(D.Chat, -1, -2))[s.mask])),
    )
    metricity = compatibility_check(D, s.sasaki, s.J, eg=s.eg)["metricity"]
    out = [("symmetry", sym, "symbolic", False), ("metricity", metricity, "symbolic", False)]
    if s.lag.alpha.is_integer:
        gap = _worst(s.oracle_gap("Lhat", D.Lhat), s.oracle_gap("Chat", D.Chat))
        out.append(("oracle", gap, "grid", False))
    return out


def _torsion_array(forms, lattice: Lattice) -> np.ndarray:
    return np.stack([form_matrix(f, lattice) for f in forms], axis=-3)


def _torsion(s: _Stages) -> List[Finding]:
    n = s.lag.n
    th = _torsion_array(s.torsion.horizontal, s.lattice)
    out = [("purity", float(np.max(np.abs(th[..., :n, :n])[s.mask])), "symbolic", False)]
    if s.lag.alpha.is_integer:
        gap = _worst(
            s.oracle_gap("torsion_h", th),
            s.oracle_gap("torsion_v", _torsion_array(s.torsion.vertical, s.lattice)),
        )
        out.append(("oracle", gap, "grid", False))
    return out


def _structure(s: _Stages) -> List[Finding]:
    first, second, curvature = structure_equation_residuals(s.dconnection, s.frame, s.torsion, s.mask)
    logger.info("curvature 2-forms: max coefficient %.6g", curvature.max_abs(s.mask, s.lattice))
    return [("first", first, "grid", False), ("second", second, "grid", True)]


def _symplectic(s: _Stages) -> List[Finding]:
    res = closure_checks(s.symplectic, s.metric, s.frame, s.nonholonomy, eg=s.eg)
    out = [("probe", s.symplectic.probe_residual, "symbolic", False)]
    out += [(name, value, "grid", True) for name, value in res.items()]
    if s.lag.alpha.is_integer:
        omega = np.stack(
            [s.symplectic.omega.component(i).sample(s.lattice, strict=False).values for i in range(s.lag.n)], -1
        )
        theta = form_matrix(s.symplectic.theta, s.lattice)
        out.append(("oracle", _worst(s.oracle_gap("omega", omega), s.oracle_gap("theta", theta)), "grid", False))
    return out


def _compatibility(s: _Stages) -> List[Finding]:
    res = compatibility_check(s.dconnection, s.sasaki, s.J, s.symplectic, eg=s.eg)
    return [("metricity", res["metricity"], "symbolic", False), ("dj", res["dj"], "symbolic", False)]


def _finsler(s: _Stages) -> List[Finding]:
    return [("homogeneity", homogeneity_residual(s.lag, s.lattice), "symbolic", False)]


CHECKS: Dict[str, Callable[[_Stages], List[Finding]]] = {
    "hessian": _hessian,
    "spray": _spray,
    "nconnection": _nconnection,
    "dconnection": _dconnection,
    "torsion": _torsion,
    "structure": _structure,
    "symplectic": _symplectic,
    "compatibility": _compatibility,
    "finsler": _finsler,
}


def grade(residual: Optional[float], tolerance: float, hard: bool) -> str:
    bad = residual is None or not math.isfinite(residual) or residual > tolerance
    if not bad:
        return "pass"
    return "fail" if hard else "warn"


class _Recorder:
    def __init__(self, config: JobConfig, alpha: float):
        self.alpha = alpha
        self.integer = alpha == 1.0
        self.tolerances = config.tolerances
        self.records: List[CheckRecord] = []
        self.wall: Dict[str, float] = {}

    def tolerance(self, kind: str) -> float:
        if kind == "symbolic":
            return self.tolerances.symbolic
        return self.tolerances.grid if self.integer else self.tolerances.fractional

    def add(self, name: str, residual: Optional[float], tol: float, hard: bool, nodes: int, wall: float, detail: Optional[str] = None):
        residual = None if residual is None or not math.isfinite(residual) else float(residual)
        record = CheckRecord(
            name=name,
            alpha=self.alpha,
            max_residual=residual,
            tolerance=tol,
            hard=hard,
            verdict=grade(residual, tol, hard),
            node_count=nodes,
            detail=detail,
        )
        self.records.append(record)
        self.wall[f"{name}@alpha={self.alpha:g}"] = round(wall, 6)
        log = logger.warning if record.verdict == "fail" else logger.info
        log("%s alpha=%g residual=%s tol=%g -> %s", name, self.alpha, residual, tol, record.verdict)


def _run_order(config: JobConfig, chart: ChartSpec, lattice: Lattice, alpha: float, seed: int):
    rec = _Recorder(config, alpha)
    stages = _Stages(build_lagrangian(config, chart, alpha), lattice, seed)
    det_min: Optional[float] = None
    for check in config.checks:
        if check == "finsler" and not config.finsler:
            continue
        start = time.perf_counter()
        try:
            findings = CHECKS[check](stages)
        except RegularityError as exc:
            rec.add("hessian.regularity", None, rec.tolerances.symbolic, True, 0, time.perf_counter() - start, str(exc))
            det_min = exc.det_min
            logger.warning("alpha=%g: %s; remaining checks skipped", alpha, exc)
            break
        except FrakgeoError as exc:
            rec.add(f"{check}.error", None, rec.tolerance("grid"), True, 0, time.perf_counter() - start, f"{type(exc).__name__}: {exc}")
            continue
        wall = time.perf_counter() - start
        nodes = int(stages.mask.sum())
        for aspect, residual, kind, soft in findings:
            hard = not (soft and not rec.integer)
            rec.add(f"{check}.{aspect}", residual, rec.tolerance(kind), hard, nodes, wall)
        det_min = stages.metric.det_samples
    return rec, det_min


def run_job(config: JobConfig, *, alpha: Optional[float] = None, seed: Optional[int] = None) -> VerificationReport:
    """Run every selected check for every order in the job; deterministic except for the timing block."""
    from .. import __version__

    if alpha is not None or seed is not None:
        config = with_overrides(config, alpha=alpha, seed=seed)
    chart = build_chart(config)
    lattice = build_lattice(config, chart)
    records: List[CheckRecord] = []
    wall: Dict[str, float] = {}
    det_g_min: Dict[str, Optional[float]] = {}
    for a in config.alphas():
        logger.info("running alpha=%g on lattice %s", a, lattice.shape)
        rec, det_min = _run_order(config, chart, lattice, a, config.seed)
        records.extend(rec.records)
        wall.update(rec.wall)
        det_g_min[f"{a:g}"] = det_min
    metadata = ReportMetadata(
        version=__version__,
        dimension=config.dimension,
        finsler=config.finsler,
        lattice=config.lattice,
        det_g_min=det_g_min,
    )
    timing = Timing(generated_at=datetime.now(timezone.utc).isoformat(timespec="seconds"), wall_time=wall)
    return VerificationReport(seed=config.seed, metadata=metadata, checks=records, timing=timing)

"""Parameter sweeps, fibre-distance conversion, t optimisation and model fitting."""

from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Mapping, Optional, Sequence

import numpy as np

from .amplifier import T_MAX, AmplifierConfig, run_amplifier, with_params
from .errors import InfeasibleTargetError, SimulationError, UnderdeterminedFitError

log = logging.getLogger(__name__)

__all__ = [
    "QUANTITIES",
    "FIT_PARAMS",
    "SweepSpec",
    "SweepRow",
    "FitResult",
    "default_grid",
    "sweep",
    "distance_to_loss",
    "loss_to_distance",
    "find_min_t",
    "fit_model",
]

QUANTITIES = ("gain", "herald_probability", "herald_efficiency", "visibility")
FIBRE_DB_PER_KM = 0.24

# fit parameter name -> AmplifierConfig field (detector_* reach into detector_b)
FIT_PARAMS = {
    "intrinsic_loss": "intrinsic_loss",
    "detector_efficiency": "detector_efficiency",
    "dark_prob": "detector_dark_prob",
    "p_pair": "p_pair",
}


def default_grid(n: int = 11, lo: float = 0.5, hi: float = 0.99) -> list[float]:
    """Uniform grid of ``n`` points on ``[lo, hi]``.

    The measured device settings were never tabulated, so this is only a
    convenient stand-in covering the same range.
    """
    return [float(x) for x in np.linspace(lo, hi, n)]


@dataclass(frozen=True)
class SweepSpec:
    p_values: Sequence[float]
    t_values: Sequence[float]
    base_config: AmplifierConfig
    quantities: Sequence[str] = ("gain", "herald_probability", "herald_efficiency")

    def __post_init__(self):
        if not self.p_values or not self.t_values:
            raise ValueError("p_values and t_values must be non-empty")
        bad = set(self.quantities) - set(QUANTITIES)
        if bad:
            raise ValueError(f"unknown quantities {sorted(bad)}")
        if "visibility" in self.quantities and not self.base_config.input_coherent:
            raise ValueError("visibility needs base_config.input_coherent=True")


@dataclass(frozen=True)
class SweepRow:
    p: float
    t: float
    gain: Optional[float] = None
    herald_probability: Optional[float] = None
    herald_efficiency: Optional[float] = None
    visibility: Optional[float] = None
    error: Optional[str] = None

    def __post_init__(self):
        for name in ("p", "t", *QUANTITIES):
            v = getattr(self, name)
            if v is not None and not (math.isfinite(v) and v >= 0):
                raise ValueError(f"SweepRow.{name} must be a finite non-negative real, got {v}")

    def values(self) -> dict[str, float]:
        return {q: getattr(self, q) for q in QUANTITIES if getattr(self, q) is not None}


def _evaluate(args) -> SweepRow:
    cfg, quantities = args
    try:
        res = run_amplifier(cfg)
    except SimulationError as exc:
        log.warning("grid point p=%g t=%g failed: %s", cfg.p, cfg.t, exc)
        return SweepRow(cfg.p, cfg.t, error=f"{type(exc).__name__}: {exc}")
    return SweepRow(cfg.p, cfg.t, **{q: getattr(res, q) for q in quantities})


def sweep(spec: SweepSpec, max_workers: Optional[int] = None) -> list[SweepRow]:
    """Evaluate every ``(p, t)`` point; p is the outer loop.

    Failing points yield a row with ``error`` set instead of aborting. With
    ``max_workers > 1`` points run in a process pool; row order is unchanged.
    """
    jobs = []
    for p in spec.p_values:
        for t in spec.t_values:
            try:
                cfg = replace(spec.base_config, p=float(p), t=float(t))
            except SimulationError as exc:
                jobs.append(SweepRow(float(p), float(t), error=f"{type(exc).__name__}: {exc}"))
                continue
            jobs.append((cfg, tuple(spec.quantities)))

    todo = [j for j in jobs if not isinstance(j, SweepRow)]
    if max_workers and max_workers > 1:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            done = iter(list(pool.map(_evaluate, todo)))
    else:
        done = iter([_evaluate(j) for j in todo])
    return [j if isinstance(j, SweepRow) else next(done) for j in jobs]


def distance_to_loss(km: float, attenuation_db_per_km: float = FIBRE_DB_PER_KM) -> float:
    """Vacuum probability ``1 - 10**(-a km / 10)`` after ``km`` of fibre."""
    if km < 0:
        raise ValueError(f"distance must be non-negative, got {km}")
    return -math.expm1(-attenuation_db_per_km * km / 10.0 * math.log(10.0))


def loss_to_distance(p: float, attenuation_db_per_km: float = FIBRE_DB_PER_KM) -> float:
    """Fibre length whose loss equals ``p``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"loss must lie in [0, 1], got {p}")
    if p == 1.0:
        raise ValueError("p = 1 corresponds to an infinite distance")
    return -10.0 * math.log1p(-p) / math.log(10.0) / attenuation_db_per_km


def find_min_t(
    p: float,
    target_efficiency: float,
    cfg: AmplifierConfig,
    lo: float = 0.5,
    hi: float = T_MAX,
    tol: float = 1e-6,
) -> float:
    """Smallest ``t`` in ``[lo, hi]`` whose heralded efficiency reaches the target.

    Bisection to ``tol``; the returned value always satisfies the target.
    Efficiency must be non-decreasing in t over the bracket, which is checked
    on a coarse grid first.
    """

    def eff(t: float) -> float:
        return run_amplifier(replace(cfg, p=p, t=t)).herald_efficiency

    if eff(lo) >= target_efficiency:
        return lo
    top = eff(hi)
    if top < target_efficiency:
        raise InfeasibleTargetError(
            f"efficiency {top:.6g} at t={hi} is below target {target_efficiency}"
        )
    probe = [eff(t) for t in np.linspace(lo, hi, 9)]
    if any(b < a - 1e-12 for a, b in zip(probe, probe[1:])):
        raise SimulationError("heralded efficiency is not monotone in t on the bracket")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if eff(mid) >= target_efficiency:
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class FitResult:
    params: dict[str, float]
    residual: float
    evaluations: int = 0


def _objective(data: Sequence[SweepRow], cfg: AmplifierConfig) -> float:
    total = []
    for row in data:
        target = row.values()
        try:
            res = run_amplifier(replace(cfg, p=row.p, t=row.t))
        except SimulationError:
            return math.inf
        for q, v in target.items():
            sim = getattr(res, q)
            if sim is None:
                return math.inf
            total.append((sim - v) ** 2)
    return math.fsum(total)


def fit_model(
    data: Sequence[SweepRow],
    free_params: Sequence[str],
    bounds: Mapping[str, tuple[float, float]],
    base_config: AmplifierConfig,
    grid_points: int = 11,
    min_step: float = 1e-4,
) -> FitResult:
    """Least-squares fit of device parameters to measured rows.

    A coarse grid over the bounds is followed by a coordinate pattern search
    whose step halves on every unsuccessful sweep until it drops below
    ``min_step``. Deterministic for fixed inputs.
    """
    data = [r for r in data if r.error is None]
    for name in free_params:
        if name not in FIT_PARAMS:
            raise ValueError(f"cannot fit {name!r}; choose from {sorted(FIT_PARAMS)}")
        lo, hi = bounds[name]
        if not lo <= hi:
            raise ValueError(f"bad bounds for {name}: {bounds[name]}")
    distinct = {(r.p, r.t, tuple(sorted(r.values().items()))) for r in data}
    if free_params and len(distinct) < len(free_params):
        raise UnderdeterminedFitError(
            f"{len(distinct)} distinct data rows cannot determine {len(free_params)} parameters"
        )
    if not data:
        raise UnderdeterminedFitError("no usable data rows")

    nevals = 0

    def cost(x: Sequence[float]) -> float:
        nonlocal nevals
        nevals += 1
        try:
            cfg = with_params(base_config, **{FIT_PARAMS[n]: float(v) for n, v in zip(free_params, x)})
        except (SimulationError, ValueError):
            return math.inf
        return _objective(data, cfg)

    if not free_params:
        return FitResult({}, cost(()), nevals)

    axes = [np.linspace(*bounds[n], grid_points) for n in free_params]
    best_x, best_f = None, math.inf
    for x in itertools.product(*axes):
        f = cost(x)
        if f < best_f:
            best_x, best_f = list(map(float, x)), f
    if best_x is None:
        raise SimulationError("objective is infinite over the whole grid")

    steps = [(bounds[n][1] - bounds[n][0]) / (grid_points - 1) / 2 for n in free_params]
    while max(steps) >= min_step:
        improved = False
        for i, name in enumerate(free_params):
            lo, hi = bounds[name]
            for direction in (+1, -1):
                trial = list(best_x)
                trial[i] = min(hi, max(lo, best_x[i] + direction * steps[i]))
                if trial[i] == best_x[i]:
                    continue
                f = cost(trial)
                if f < best_f:
                    best_x, best_f, improved = trial, f, True
                    break
        if not improved:
            steps = [s / 2 for s in steps]
    return FitResult(dict(zip(free_params, best_x)), best_f, nevals)

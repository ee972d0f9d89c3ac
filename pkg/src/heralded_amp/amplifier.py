"""Heralded noiseless photon amplifier (quantum scissors).

Circuit, with register modes named after their role::

    input --[loss p]--------------------------\\
                                               50/50 -- det1 (herald), det2
    ancilla --[eta_amp]-- t splitter -- meas --/
                              |
                              out --[eta_amp]--> amplified output

The ancilla photon is sent to ``out`` with amplitude ``sqrt(t)`` and to the
measurement arm with ``sqrt(1-t)``. Conditioned on a single detection at
``det1`` the output is ``p|0><0| + g^2 (1-p)|1><1|`` up to normalisation,
with ``g^2 = t / (1 - t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, DivergenceError, ImpossibleEventError, UndefinedGainError
from .fock import Ensemble, ModeRegister, PureState, make_basis_state, merge_and_renormalise, photon_number_distribution, trace_out
from .optics import apply_beam_splitter, apply_loss, apply_phase
from .sources import DetectorModel, SourceModel, measure_click, tmsv_state

__all__ = [
    "HERALD_RULES",
    "T_MAX",
    "AmplifierConfig",
    "AmplifierResult",
    "HomResult",
    "g_squared",
    "gain_ideal",
    "herald_efficiency_ideal",
    "visibility_ideal",
    "run_amplifier",
    "fringe_visibility",
    "hom_coincidence",
]

HERALD_RULES = ("single_port_click", "click_and_no_click")
T_MAX = 1.0 - 1e-9
DEFAULT_PHASES = tuple(np.linspace(0.0, 2 * np.pi, 16, endpoint=False))


def g_squared(t: float) -> float:
    """Gain factor ``t / (1 - t)``."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1), got {t}")
    if t == 1.0:
        raise DivergenceError("g^2(t) diverges at t = 1")
    return t / (1.0 - t)


def _ideal_denominator(t: float, p: float) -> float:
    if t == 1.0:
        raise DivergenceError("g^2(t) diverges at t = 1")
    if not (0.0 <= t < 1.0 and 0.0 <= p <= 1.0):
        raise ValueError(f"need t in [0, 1) and p in [0, 1], got t={t}, p={p}")
    den = (1.0 - t) * p + t * (1.0 - p)
    if den == 0.0:
        raise UndefinedGainError(f"gain undefined at t={t}, p={p}")
    return den


def gain_ideal(t: float, p: float) -> float:
    """Closed-form gain ``t / ((1-t) p + t (1-p))`` of a lossless amplifier with PNR herald."""
    return t / _ideal_denominator(t, p)


def herald_efficiency_ideal(t: float, p: float) -> float:
    """Probability that the output holds the photon, given a herald, for the ideal device."""
    return t * (1.0 - p) / _ideal_denominator(t, p)


def visibility_ideal(t: float, p: float) -> float:
    """Single-photon interference visibility between the amplified and the lost mode."""
    a, b = (1.0 - p) * t, p * (1.0 - t)
    if a + b == 0.0:
        raise UndefinedGainError("visibility undefined: both interfering amplitudes vanish")
    return 2.0 * math.sqrt(a * b) / (a + b)


@dataclass(frozen=True)
class AmplifierConfig:
    """Full description of one amplifier run.

    ``intrinsic_loss`` is the transmission of the amplifier internals; it is
    applied once to the ancilla path and once to the output path. With
    ``p_pair == 0`` the input and ancilla are exact single photons; otherwise
    both come from one two-mode squeezed vacuum (signal -> input,
    idler -> ancilla).
    """

    p: float
    t: float
    p_pair: float = 0.0
    detector_b: DetectorModel = field(default_factory=DetectorModel.ideal)
    intrinsic_loss: float = 1.0
    input_coherent: bool = False
    cutoff: int = 4
    herald_rule: str = "single_port_click"
    source_cutoff: int = 2

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError("p", f"input loss must lie in [0, 1], got {self.p}")
        if not 0.0 <= self.t <= T_MAX:
            raise ConfigError("t", f"transmission must lie in [0, 1 - 1e-9], got {self.t}")
        if not 0.0 <= self.p_pair < 1.0:
            raise ConfigError("p_pair", f"pair probability must lie in [0, 1), got {self.p_pair}")
        if not 0.0 <= self.intrinsic_loss <= 1.0:
            raise ConfigError("intrinsic_loss", f"must lie in [0, 1], got {self.intrinsic_loss}")
        if self.herald_rule not in HERALD_RULES:
            raise ConfigError("herald_rule", f"must be one of {HERALD_RULES}, got {self.herald_rule!r}")
        if self.cutoff < 2:
            raise ConfigError("cutoff", f"amplifier needs cutoff >= 2, got {self.cutoff}")
        if self.p_pair > 0 and 2 * self.source_cutoff > self.cutoff:
            raise ConfigError(
                "cutoff", f"cutoff {self.cutoff} cannot hold {self.source_cutoff} pairs bunching on one port"
            )


@dataclass(frozen=True)
class AmplifierResult:
    herald_probability: float
    output: Ensemble
    herald_efficiency: float
    gain: float
    visibility: Optional[float] = None


@dataclass(frozen=True)
class HomResult:
    coincidence_prob: float
    visibility: float


def _register(cutoff: int) -> ModeRegister:
    return ModeRegister(
        [("input", "input"), ("lost", "lost"), ("out", "ancilla_out"), ("meas", "ancilla_meas")],
        cutoff,
    )


def _herald(e: Ensemble, cfg: AmplifierConfig) -> Ensemble:
    """Condition on the herald and drop both detector modes."""
    det = cfg.detector_b
    first = measure_click(e, det, "det1")
    fired = first.exactly(1) if det.number_resolving else first.click
    if cfg.herald_rule == "single_port_click":
        return trace_out(fired.ensemble, "det2")
    return measure_click(fired.ensemble, det, "det2").no_click.ensemble


def _heralded_output(cfg: AmplifierConfig) -> tuple[Ensemble, float]:
    """Unnormalised heralded state on (lost, out) and the herald probability."""
    reg = _register(cfg.cutoff)
    if cfg.p_pair == 0.0:
        state: PureState | Ensemble = make_basis_state(reg, (1, 0, 1, 0))
    else:
        src = SourceModel(cfg.p_pair, cfg.source_cutoff)
        state = tmsv_state(src, reg, signal="input", idler="out")

    # channel loss on the input photon
    if cfg.input_coherent:
        state = apply_beam_splitter(state, 1.0 - cfg.p, "input", "lost")
    else:
        state = apply_loss(state, 1.0 - cfg.p, "input")

    state = apply_loss(state, cfg.intrinsic_loss, "out")
    state = apply_beam_splitter(state, cfg.t, "out", "meas")
    state = apply_beam_splitter(state, 0.5, "input", "meas")
    state = state.relabel("input", "det1", "det1").relabel("meas", "det2", "det2")

    heralded = _herald(state, cfg)
    heralded = apply_loss(heralded, cfg.intrinsic_loss, "out")
    return heralded, heralded.total_weight()


def _fringe(output: Ensemble, phases: Sequence[float], detector: DetectorModel) -> tuple[list[tuple[float, float]], float]:
    fringe = []
    for phi in phases:
        s = apply_phase(output, float(phi), "out")
        s = apply_beam_splitter(s, 0.5, "out", "lost")
        fringe.append((float(phi), measure_click(s, detector, "out").click.probability))
    probs = [p for _, p in fringe]
    hi, lo = max(probs), min(probs)
    if hi + lo <= 0.0:
        raise UndefinedGainError("fringe has zero mean; visibility undefined")
    return fringe, (hi - lo) / (hi + lo)


def run_amplifier(cfg: AmplifierConfig) -> AmplifierResult:
    """Simulate the amplifier and condition on the herald.

    The returned output ensemble lives on the ``out`` mode, plus ``lost``
    when ``cfg.input_coherent`` is set. Gain is the ratio of output to input
    single-photon probability, ``herald_efficiency / (1 - p)``.
    """
    heralded, prob = _heralded_output(cfg)
    if prob <= 0.0:
        raise ImpossibleEventError(f"herald never fires for {cfg}")
    output, _ = merge_and_renormalise(heralded)

    visibility = None
    if cfg.input_coherent:
        _, visibility = _fringe(output, DEFAULT_PHASES, DetectorModel.ideal(False))
    else:
        output = trace_out(output, "lost")

    efficiency = 1.0 - photon_number_distribution(output, "out").get(0, 0.0)
    efficiency = min(1.0, max(0.0, efficiency))
    if cfg.p >= 1.0:
        raise UndefinedGainError("gain undefined for p = 1 (no input photon)")
    return AmplifierResult(
        herald_probability=prob,
        output=output,
        herald_efficiency=efficiency,
        gain=efficiency / (1.0 - cfg.p),
        visibility=visibility,
    )


def fringe_visibility(
    cfg: AmplifierConfig,
    phases: Sequence[float] = DEFAULT_PHASES,
    detector: Optional[DetectorModel] = None,
) -> tuple[list[tuple[float, float]], float]:
    """Interfere the heralded output with the lost mode and scan the phase.

    Returns the fringe as ``(phase, click probability)`` pairs for the
    ``out`` port after a balanced splitter, and ``V = (max - min)/(max + min)``
    over the sampled points. The default 16-point grid contains both
    extremes of the real beam-splitter convention (0 and pi).
    """
    if not cfg.input_coherent:
        raise ValueError("fringe_visibility needs input_coherent=True")
    if len({float(p) for p in phases}) < 3:
        raise ValueError("need at least 3 distinct phases")
    heralded, prob = _heralded_output(cfg)
    if prob <= 0.0:
        raise ImpossibleEventError(f"herald never fires for {cfg}")
    output, _ = merge_and_renormalise(heralded)
    return _fringe(output, phases, detector or DetectorModel.ideal(False))


def _hom_state(src: Optional[SourceModel], overlap: float) -> Ensemble:
    """Pair state after the balanced splitter, on ports (a, b) plus orthogonal partners."""
    pairs = 1 if src is None else src.cutoff
    reg = ModeRegister(["a", "b", "b_perp", "a_perp"], cutoff=2 * pairs)
    if src is None:
        state = make_basis_state(reg, (1, 1, 0, 0))
    else:
        state = tmsv_state(src, reg, signal="a", idler="b")
    # distinguishable fraction of the idler goes to an orthogonal mode
    state = apply_beam_splitter(state, overlap, "b", "b_perp")
    state = apply_beam_splitter(state, 0.5, "a", "b")
    state = apply_beam_splitter(state, 0.5, "b_perp", "a_perp")
    return Ensemble.from_pure(state)


def _coincidence(src, overlap, detectors) -> float:
    e = _hom_state(src, overlap)
    d1, d2 = detectors
    first = measure_click(e, d1, ("a", "a_perp")).click
    return measure_click(first.ensemble, d2, ("b", "b_perp")).click.probability


def hom_coincidence(
    src: Optional[SourceModel],
    overlap: float = 1.0,
    detectors: Sequence[DetectorModel] = (DetectorModel.ideal(False), DetectorModel.ideal(False)),
) -> HomResult:
    """Hong-Ou-Mandel coincidence probability and visibility.

    ``src=None`` or ``p_pair == 0`` means one exact photon pair. Visibility is
    ``1 - C(overlap) / C(0)``, with fully distinguishable photons as the
    reference.
    """
    if not 0.0 <= overlap <= 1.0:
        raise ValueError(f"overlap must lie in [0, 1], got {overlap}")
    if src is not None and src.p_pair == 0.0:
        src = None
    c = _coincidence(src, overlap, detectors)
    ref = _coincidence(src, 0.0, detectors)
    if ref <= 0.0:
        raise UndefinedGainError("reference coincidence probability is zero")
    return HomResult(coincidence_prob=c, visibility=1.0 - c / ref)


def with_params(cfg: AmplifierConfig, **changes) -> AmplifierConfig:
    """``dataclasses.replace`` that also reaches into the herald detector."""
    det = {k[len("detector_"):]: changes.pop(k) for k in list(changes) if k.startswith("detector_") and k != "detector_b"}
    if det:
        changes["detector_b"] = replace(changes.get("detector_b", cfg.detector_b), **det)
    return replace(cfg, **changes)

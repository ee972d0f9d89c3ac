"""Photon sources and click-detector measurements."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Union

from .fock import Ensemble, ModeRegister, PureState, StateLike, as_ensemble, make_basis_state, merge_branches, split_by_modes

__all__ = [
    "SourceModel",
    "DetectorModel",
    "Outcome",
    "ClickResult",
    "input_state",
    "coherent_input_state",
    "tmsv_state",
    "measure_click",
]


@dataclass(frozen=True)
class SourceModel:
    """SPDC pair source.

    Args:
        p_pair: pair-emission probability per pulse (``lambda^2`` of the
            two-mode squeezed vacuum).
        cutoff: largest number of pairs kept.
    """

    p_pair: float = 0.01
    cutoff: int = 2

    def __post_init__(self):
        if not 0.0 <= self.p_pair < 1.0:
            raise ValueError(f"p_pair must lie in [0, 1), got {self.p_pair}")
        if self.cutoff < 1:
            raise ValueError("source cutoff must be >= 1")


@dataclass(frozen=True)
class DetectorModel:
    """Gated click detector.

    ``number_resolving=False`` gives a threshold (click / no-click) detector.
    Dark counts are an independent extra click with probability
    ``dark_prob``, so an ``n``-photon input stays silent with probability
    ``(1 - dark_prob) * (1 - efficiency)**n``.
    """

    efficiency: float = 1.0
    dark_prob: float = 0.0
    number_resolving: bool = False

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError(f"efficiency must lie in [0, 1], got {self.efficiency}")
        if not 0.0 <= self.dark_prob < 1.0:
            raise ValueError(f"dark_prob must lie in [0, 1), got {self.dark_prob}")

    @classmethod
    def ideal(cls, number_resolving: bool = True) -> DetectorModel:
        return cls(1.0, 0.0, number_resolving)

    @classmethod
    def gated_apd(cls) -> DetectorModel:
        """InGaAs gated APD as used in the telecom experiment: 25 % efficiency, 1e-5 noise per gate."""
        return cls(0.25, 1e-5, False)

    def no_click_prob(self, n: int) -> float:
        return (1.0 - self.dark_prob) * (1.0 - self.efficiency) ** n

    def count_probs(self, n: int) -> dict[int, float]:
        """Distribution of registered counts for ``n`` incident photons (PNR model)."""
        eta = self.efficiency
        binom = [math.comb(n, k) * eta**k * (1.0 - eta) ** (n - k) for k in range(n + 1)]
        out: dict[int, float] = defaultdict(float)
        for k, b in enumerate(binom):
            out[k] += (1.0 - self.dark_prob) * b
            out[k + 1] += self.dark_prob * b
        return {k: v for k, v in out.items() if v > 0.0}


class Outcome(NamedTuple):
    """Post-measurement ensemble (subnormalised) and its probability."""

    ensemble: Ensemble
    probability: float


@dataclass(frozen=True)
class ClickResult:
    click: Outcome
    no_click: Outcome
    counts: Optional[dict[int, Outcome]] = None

    def exactly(self, k: int) -> Outcome:
        """Outcome with exactly ``k`` registered counts (PNR detectors only)."""
        if self.counts is None:
            raise ValueError("detector is not number resolving")
        if k in self.counts:
            return self.counts[k]
        return Outcome(Ensemble(self.no_click.ensemble.register, ()), 0.0)


def input_state(p: float, register: ModeRegister, signal: str = "input") -> Ensemble:
    """Lossy single photon ``p |0><0| + (1 - p) |1><1|`` in ``signal``, vacuum elsewhere."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    occ = [0] * len(register)
    vac = make_basis_state(register, occ)
    occ[register.index(signal)] = 1
    one = make_basis_state(register, occ)
    return Ensemble(register, ((p, vac), (1.0 - p, one)))


def coherent_input_state(p: float, register: ModeRegister, kept: str = "input", lost: str = "lost") -> PureState:
    """Single photon split coherently: ``sqrt(1-p)|1,0> + sqrt(p)|0,1>`` on (kept, lost)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    base = [0] * len(register)
    a, b = list(base), list(base)
    a[register.index(kept)] = 1
    b[register.index(lost)] = 1
    return PureState(register, {tuple(a): math.sqrt(1.0 - p), tuple(b): math.sqrt(p)})


def tmsv_state(src: SourceModel, register: ModeRegister, signal: str = "signal", idler: str = "idler") -> PureState:
    """Two-mode squeezed vacuum truncated at ``src.cutoff`` pairs and renormalised.

    Before truncation the pair number is geometric,
    ``P(n) = (1 - p_pair) p_pair**n``.
    """
    if src.cutoff > register.cutoff:
        raise ValueError(f"source cutoff {src.cutoff} exceeds register cutoff {register.cutoff}")
    i, j = register.index(signal), register.index(idler)
    lam2 = src.p_pair
    probs = [(1.0 - lam2) * lam2**n for n in range(src.cutoff + 1)]
    total = math.fsum(probs)
    amps = {}
    for n, pn in enumerate(probs):
        occ = [0] * len(register)
        occ[i] = occ[j] = n
        amps[tuple(occ)] = math.sqrt(pn / total)
    return PureState(register, amps)


def measure_click(x: StateLike, det: DetectorModel, mode: Union[str, Sequence[str]]) -> ClickResult:
    """Apply the detector POVM to ``mode`` and project it out.

    ``mode`` may be a tuple of labels, in which case the detector sees the
    total photon number in those modes (e.g. a spatial port carrying two
    orthogonal spectral or polarisation modes). The returned ensembles carry
    weights equal to the outcome probabilities; click and no-click together
    account for the full input weight.
    """
    labels = [mode] if isinstance(mode, str) else list(mode)
    e = as_ensemble(x)
    reg = e.register.without(labels)
    click, silent = [], []
    counted: dict[int, list] = defaultdict(list)
    for w, s in e.branches:
        _, groups = split_by_modes(s, labels)
        for measured, amps in groups.items():
            sub = PureState(reg, amps)
            n2 = sub.norm_squared()
            if n2 == 0:
                continue
            sub = sub.normalised()
            n = sum(measured)
            base = w * n2
            p_silent = det.no_click_prob(n)
            if p_silent > 0:
                silent.append((base * p_silent, sub))
            if p_silent < 1:
                click.append((base * (1.0 - p_silent), sub))
            if det.number_resolving:
                for k, pk in det.count_probs(n).items():
                    counted[k].append((base * pk, sub))

    def outcome(branches) -> Outcome:
        ens = merge_branches(Ensemble(reg, tuple(branches)))
        return Outcome(ens, ens.total_weight())

    counts = {k: outcome(b) for k, b in sorted(counted.items())} if det.number_resolving else None
    return ClickResult(click=outcome(click), no_click=outcome(silent), counts=counts)


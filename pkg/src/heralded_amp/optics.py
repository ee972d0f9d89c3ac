"""Linear-optical transformations on sparse Fock states.

Beam-splitter convention (real orthogonal)::

    a1^dag -> sqrt(t) a1^dag + sqrt(1-t) a2^dag
    a2^dag -> sqrt(1-t) a1^dag - sqrt(t) a2^dag

i.e. the mode matrix ``[[sqrt(t), sqrt(1-t)], [sqrt(1-t), -sqrt(t)]]``. The
matrix is its own inverse, so applying the same splitter twice is the
identity. Gain, heralding probability and visibility magnitudes do not depend
on this choice; fringe phase offsets do.

Polarisation is handled by giving H and V their own register modes: a PBS is a
relabelling and a half-wave plate is a beam splitter between the two (see
:func:`hwp_as_beam_splitter`).
"""

from __future__ import annotations

import cmath
import math
from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Union

from .errors import CutoffViolationError
from .fock import PRUNE_THRESHOLD, Ensemble, PureState, StateLike, merge_branches

__all__ = [
    "apply_beam_splitter",
    "apply_phase",
    "apply_loss",
    "hwp_as_beam_splitter",
    "BeamSplitter",
    "Phase",
    "Loss",
    "CircuitElement",
    "run_circuit",
]


def _check_prob(x: float, name: str) -> float:
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {x}")
    return x


@lru_cache(maxsize=4096)
def _bs_table(t: float, n1: int, n2: int) -> tuple[tuple[int, int, float], ...]:
    """Output amplitudes ``(m1, m2, coeff)`` of ``|n1, n2>`` through the splitter."""
    rt, rr = math.sqrt(t), math.sqrt(1.0 - t)
    acc: dict[int, float] = defaultdict(float)
    for j in range(n1 + 1):
        c1 = math.comb(n1, j) * rt**j * rr ** (n1 - j)
        for k in range(n2 + 1):
            c2 = math.comb(n2, k) * rr**k * (-rt) ** (n2 - k)
            acc[j + k] += c1 * c2
    total = n1 + n2
    norm = math.sqrt(math.factorial(n1) * math.factorial(n2))
    out = []
    for m1, c in sorted(acc.items()):
        m2 = total - m1
        c *= math.sqrt(math.factorial(m1) * math.factorial(m2)) / norm
        if c != 0.0:
            out.append((m1, m2, c))
    return tuple(out)


def _bs_pure(state: PureState, t: float, m1: str, m2: str) -> PureState:
    reg = state.register
    i, j = reg.index(m1), reg.index(m2)
    if i == j:
        raise ValueError("beam splitter needs two distinct modes")
    out: dict[tuple[int, ...], complex] = defaultdict(complex)
    for occ, amp in state.amplitudes.items():
        for a, b, c in _bs_table(t, occ[i], occ[j]):
            new = list(occ)
            new[i], new[j] = a, b
            out[tuple(new)] += amp * c
    for occ, amp in out.items():
        if (occ[i] > reg.cutoff or occ[j] > reg.cutoff) and abs(amp) >= PRUNE_THRESHOLD:
            raise CutoffViolationError(
                f"beam splitter on ({m1}, {m2}) populates {occ} beyond cutoff {reg.cutoff}"
            )
    return PureState(reg, {k: v for k, v in out.items() if abs(v) >= PRUNE_THRESHOLD})


def _map_pure(x: StateLike, fn) -> StateLike:
    if isinstance(x, PureState):
        return fn(x)
    return Ensemble(x.register, tuple((w, fn(s)) for w, s in x.branches))


def apply_beam_splitter(x: StateLike, t: float, m1: str, m2: str) -> StateLike:
    """Mix modes ``m1`` and ``m2`` on a splitter of power transmission ``t``.

    Works on a pure state or branch-wise on an ensemble. Raises
    :class:`CutoffViolationError` if a non-negligible amplitude lands above
    the register cutoff.
    """
    t = _check_prob(t, "transmission t")
    return _map_pure(x, lambda s: _bs_pure(s, t, m1, m2))


def apply_phase(x: StateLike, phi: float, mode: str) -> StateLike:
    """Multiply the amplitude of ``n`` photons in ``mode`` by ``exp(i n phi)``."""

    def fn(s: PureState) -> PureState:
        i = s.register.index(mode)
        return PureState(s.register, {occ: a * cmath.exp(1j * occ[i] * phi) for occ, a in s.amplitudes.items()})

    return _map_pure(x, fn)


def apply_loss(x: StateLike, eta: float, mode: str) -> Ensemble:
    """Pure-loss channel of transmission ``eta`` on ``mode``.

    Implemented with the Kraus operators indexed by the number ``k`` of lost
    photons, ``A_k |n> = sqrt(C(n,k) eta^(n-k) (1-eta)^k) |n-k>``, so each
    pure branch splits into at most ``n_max + 1`` branches while coherences
    between different photon numbers are kept where they survive.
    """
    eta = _check_prob(eta, "loss transmission eta")
    e = x if isinstance(x, Ensemble) else Ensemble.from_pure(x)
    if eta == 1.0:
        return e
    i = e.register.index(mode)
    branches = []
    for w, s in e.branches:
        by_lost: dict[int, dict] = defaultdict(dict)
        for occ, amp in s.amplitudes.items():
            n = occ[i]
            for k in range(n + 1):
                kraus = math.sqrt(math.comb(n, k) * eta ** (n - k) * (1.0 - eta) ** k)
                if kraus == 0.0:
                    continue
                new = list(occ)
                new[i] = n - k
                by_lost[k][tuple(new)] = by_lost[k].get(tuple(new), 0j) + amp * kraus
        for amps in by_lost.values():
            sub = PureState(e.register, amps)
            n2 = sub.norm_squared()
            if n2 > 0:
                branches.append((w * n2, sub.normalised()))
    return merge_branches(Ensemble(e.register, tuple(branches)))


def hwp_as_beam_splitter(theta: float) -> float:
    """Power transmission ``cos^2(2 theta)`` of a half-wave plate followed by a PBS.

    The angle is taken modulo pi/2, the period of the HWP + PBS response.
    """
    theta = math.fmod(float(theta), math.pi / 2)
    t = math.cos(2 * theta) ** 2
    return min(1.0, max(0.0, t))


@dataclass(frozen=True)
class BeamSplitter:
    t: float
    modes: tuple[str, str]

    def __post_init__(self):
        _check_prob(self.t, "t")
        if self.modes[0] == self.modes[1]:
            raise ValueError("beam splitter modes must be distinct")

    def apply(self, x: StateLike) -> StateLike:
        return apply_beam_splitter(x, self.t, *self.modes)


@dataclass(frozen=True)
class Phase:
    phi: float
    mode: str

    def apply(self, x: StateLike) -> StateLike:
        return apply_phase(x, self.phi, self.mode)


@dataclass(frozen=True)
class Loss:
    eta: float
    mode: str

    def __post_init__(self):
        _check_prob(self.eta, "eta")

    def apply(self, x: StateLike) -> Ensemble:
        return apply_loss(x, self.eta, self.mode)


CircuitElement = Union[BeamSplitter, Phase, Loss]


def run_circuit(x: StateLike, elements: Iterable[CircuitElement]) -> StateLike:
    for el in elements:
        x = el.apply(x)
    return x

"""Sparse truncated multimode Fock states and ensembles of pure branches.

A :class:`PureState` stores a map from occupation tuples to complex
amplitudes. Mixed states are :class:`Ensemble` objects holding weighted,
unit-norm pure branches; the total weight of an ensemble may be below one, in
which case it is the probability of whatever conditioning produced it.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

from .errors import (
    CutoffViolationError,
    ImpossibleEventError,
    IncompatibleRegisterError,
    UnknownModeError,
)

__all__ = [
    "ROLES",
    "PRUNE_THRESHOLD",
    "PROB_TOL",
    "ModeRegister",
    "PureState",
    "Ensemble",
    "make_basis_state",
    "inner_product",
    "norm_squared",
    "photon_number_distribution",
    "merge_and_renormalise",
    "trace_out",
    "as_ensemble",
]

Occupation = tuple[int, ...]

ROLES = frozenset({"input", "lost", "ancilla_out", "ancilla_meas", "det1", "det2", "aux"})
PRUNE_THRESHOLD = 1e-15
PROB_TOL = 1e-12
DEFAULT_CUTOFF = 4


@dataclass(frozen=True)
class ModeRegister:
    """Ordered, labelled optical modes sharing one Fock cutoff.

    Args:
        modes: sequence of ``(label, role)`` pairs. A bare string is accepted
            and given the ``aux`` role.
        cutoff: maximum photon number per mode.
    """

    modes: tuple[tuple[str, str], ...]
    cutoff: int = DEFAULT_CUTOFF

    def __init__(self, modes: Iterable[Union[str, tuple[str, str]]], cutoff: int = DEFAULT_CUTOFF):
        normalised = tuple((m, "aux") if isinstance(m, str) else (str(m[0]), str(m[1])) for m in modes)
        labels = [label for label, _ in normalised]
        if len(set(labels)) != len(labels):
            raise ValueError(f"mode labels must be unique, got {labels}")
        for label, role in normalised:
            if role not in ROLES:
                raise ValueError(f"unknown role {role!r} for mode {label!r}")
        if int(cutoff) < 1:
            raise ValueError("cutoff must be >= 1")
        object.__setattr__(self, "modes", normalised)
        object.__setattr__(self, "cutoff", int(cutoff))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.modes)

    def __len__(self) -> int:
        return len(self.modes)

    def index(self, label: str) -> int:
        for i, (name, _) in enumerate(self.modes):
            if name == label:
                return i
        raise UnknownModeError(f"unknown mode {label!r}; register has {self.labels}")

    def role(self, label: str) -> str:
        return self.modes[self.index(label)][1]

    def without(self, labels: Union[str, Sequence[str]]) -> ModeRegister:
        drop = {labels} if isinstance(labels, str) else set(labels)
        for label in drop:
            self.index(label)
        return ModeRegister([m for m in self.modes if m[0] not in drop], self.cutoff)

    def relabel(self, label: str, new_label: str, role: str | None = None) -> ModeRegister:
        i = self.index(label)
        modes = list(self.modes)
        modes[i] = (new_label, role or modes[i][1])
        return ModeRegister(modes, self.cutoff)

    def with_cutoff(self, cutoff: int) -> ModeRegister:
        return ModeRegister(self.modes, cutoff)

    def check(self, occ: Sequence[int]) -> Occupation:
        """Return ``occ`` as a tuple after validating it against the register."""
        occ = tuple(int(n) for n in occ)
        if len(occ) != len(self.modes):
            raise ValueError(f"occupation {occ} has {len(occ)} entries, register has {len(self.modes)} modes")
        if any(n < 0 for n in occ):
            raise ValueError(f"negative occupation in {occ}")
        if any(n > self.cutoff for n in occ):
            raise CutoffViolationError(f"occupation {occ} exceeds cutoff {self.cutoff}")
        return occ


@dataclass(frozen=True)
class PureState:
    """Sparse ket on a :class:`ModeRegister`.

    Amplitudes with magnitude below :data:`PRUNE_THRESHOLD` are dropped at
    construction. The squared norm may be below one (a conditioned branch).
    """

    register: ModeRegister
    amplitudes: Mapping[Occupation, complex] = field(default_factory=dict)

    def __post_init__(self):
        amps: dict[Occupation, complex] = {}
        for occ, amp in self.amplitudes.items():
            amp = complex(amp)
            if abs(amp) < PRUNE_THRESHOLD:
                continue
            amps[self.register.check(occ)] = amp
        object.__setattr__(self, "amplitudes", amps)
        if self.norm_squared() > 1 + PROB_TOL:
            raise ValueError(f"state norm^2 {self.norm_squared()!r} exceeds 1")

    def norm_squared(self) -> float:
        return math.fsum(abs(a) ** 2 for a in self.amplitudes.values())

    def normalised(self) -> PureState:
        n2 = self.norm_squared()
        if n2 <= 0:
            raise ImpossibleEventError("cannot normalise a zero state")
        s = 1 / math.sqrt(n2)
        return PureState(self.register, {k: a * s for k, a in self.amplitudes.items()})

    def scaled(self, factor: complex) -> PureState:
        return PureState(self.register, {k: a * factor for k, a in self.amplitudes.items()})

    def amplitude(self, occ: Sequence[int]) -> complex:
        return self.amplitudes.get(tuple(occ), 0j)

    def __len__(self) -> int:
        return len(self.amplitudes)


@dataclass(frozen=True)
class Ensemble:
    """Weighted collection of unit-norm pure branches on one register."""

    register: ModeRegister
    branches: tuple[tuple[float, PureState], ...] = ()

    def __post_init__(self):
        kept = []
        for weight, state in self.branches:
            weight = float(weight)
            if weight < 0:
                raise ValueError(f"negative branch weight {weight}")
            if weight == 0:
                continue
            if state.register != self.register:
                raise IncompatibleRegisterError("all branches must share the ensemble register")
            if abs(state.norm_squared() - 1) > 1e-9:
                raise ValueError("ensemble branches must have unit norm")
            kept.append((weight, state))
        object.__setattr__(self, "branches", tuple(kept))
        if self.total_weight() > 1 + 1e-9:
            raise ValueError(f"ensemble weight {self.total_weight()!r} exceeds 1")

    @classmethod
    def from_pure(cls, state: PureState) -> Ensemble:
        """Wrap a (possibly subnormalised) ket; its norm^2 becomes the weight."""
        n2 = state.norm_squared()
        if n2 == 0:
            return cls(state.register, ())
        return cls(state.register, ((n2, state.normalised()),))

    @classmethod
    def from_states(cls, register: ModeRegister, states: Iterable[PureState]) -> Ensemble:
        """Collect subnormalised kets into branches, dropping empty ones."""
        branches = []
        for s in states:
            n2 = s.norm_squared()
            if n2 > 0:
                branches.append((n2, s.normalised()))
        return cls(register, tuple(branches))

    def total_weight(self) -> float:
        return math.fsum(w for w, _ in self.branches)

    def relabel(self, label: str, new_label: str, role: str | None = None) -> Ensemble:
        reg = self.register.relabel(label, new_label, role)
        return Ensemble(reg, tuple((w, PureState(reg, s.amplitudes)) for w, s in self.branches))

    def __len__(self) -> int:
        return len(self.branches)


StateLike = Union[PureState, Ensemble]


def as_ensemble(x: StateLike) -> Ensemble:
    return x if isinstance(x, Ensemble) else Ensemble.from_pure(x)


def make_basis_state(register: ModeRegister, occ: Sequence[int]) -> PureState:
    """Unit-norm Fock basis ket ``|occ>``; raises CutoffViolationError past the cutoff."""
    return PureState(register, {register.check(occ): 1.0})


def inner_product(a: PureState, b: PureState) -> complex:
    """<a|b>, conjugate-linear in ``a``."""
    if a.register != b.register:
        raise IncompatibleRegisterError("inner product of states on different registers")
    small, large = (a, b) if len(a) <= len(b) else (b, a)
    total = 0j
    for occ in small.amplitudes:
        if occ in large.amplitudes:
            total += a.amplitudes[occ].conjugate() * b.amplitudes[occ]
    return total


def norm_squared(x: StateLike) -> float:
    if isinstance(x, PureState):
        return x.norm_squared()
    return x.total_weight()


def photon_number_distribution(x: StateLike, mode: str) -> dict[int, float]:
    """Marginal photon-number distribution of ``mode``.

    The probabilities sum to the total weight of ``x``.
    """
    e = as_ensemble(x)
    i = e.register.index(mode)
    dist: dict[int, list[float]] = defaultdict(list)
    for w, s in e.branches:
        for occ, amp in s.amplitudes.items():
            dist[occ[i]].append(w * abs(amp) ** 2)
    return {n: math.fsum(v) for n, v in sorted(dist.items())}


def _same_up_to_phase(a: PureState, b: PureState, tol: float = 1e-12) -> bool:
    if a.amplitudes.keys() != b.amplitudes.keys():
        return False
    ref = max(a.amplitudes, key=lambda k: abs(a.amplitudes[k]))
    phase = b.amplitudes[ref] / a.amplitudes[ref]
    if abs(abs(phase) - 1) > tol:
        return False
    return all(abs(a.amplitudes[k] * phase - b.amplitudes[k]) <= tol for k in a.amplitudes)


def merge_branches(e: Ensemble) -> Ensemble:
    """Combine branches whose states agree up to a global phase."""
    merged: list[list] = []
    for w, s in e.branches:
        for slot in merged:
            if _same_up_to_phase(slot[1], s):
                slot[0] += w
                break
        else:
            merged.append([w, s])
    return Ensemble(e.register, tuple((w, s) for w, s in merged))


def merge_and_renormalise(e: Ensemble) -> tuple[Ensemble, float]:
    """Merge duplicate branches and rescale to unit weight.

    Returns the renormalised ensemble and the original total weight, which
    is the probability of the event that produced ``e``.
    """
    total = e.total_weight()
    if total <= 0:
        raise ImpossibleEventError("ensemble has zero total weight")
    merged = merge_branches(e)
    return Ensemble(e.register, tuple((w / total, s) for w, s in merged.branches)), total


def split_by_modes(state: PureState, labels: Sequence[str]) -> tuple[ModeRegister, dict[Occupation, dict[Occupation, complex]]]:
    """Group amplitudes by the occupation of ``labels``.

    Returns the register with ``labels`` removed and a map from measured
    occupation to the (unnormalised) amplitude map on the remaining modes.
    """
    reg = state.register
    idx = [reg.index(m) for m in labels]
    keep = [i for i in range(len(reg)) if i not in idx]
    groups: dict[Occupation, dict[Occupation, complex]] = defaultdict(dict)
    for occ, amp in state.amplitudes.items():
        groups[tuple(occ[i] for i in idx)][tuple(occ[i] for i in keep)] = amp
    return reg.without(labels), groups


def trace_out(x: StateLike, labels: Union[str, Sequence[str]]) -> Ensemble:
    """Partial trace over one or more modes."""
    labels = [labels] if isinstance(labels, str) else list(labels)
    e = as_ensemble(x)
    reg = e.register.without(labels)
    branches = []
    for w, s in e.branches:
        _, groups = split_by_modes(s, labels)
        for amps in groups.values():
            sub = PureState(reg, amps)
            n2 = sub.norm_squared()
            if n2 > 0:
                branches.append((w * n2, sub.normalised()))
    return merge_branches(Ensemble(reg, tuple(branches)))


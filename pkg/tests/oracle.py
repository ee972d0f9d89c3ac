"""Dense-tensor reference simulator used only by the tests.

Deliberately shares no code with the package: beam splitters come from the
matrix exponential of the two-mode generator, loss is a beam splitter onto an
environment mode that is never measured, and all probabilities are sums of
squared amplitudes of the final pure state weighted by detector response.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.linalg import expm


def _ladder(d: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, d + 1)), k=1)


def bs_unitary(t: float, d: int) -> np.ndarray:
    """Two-mode unitary on a (d+1)^2 space realising [[rt, rr], [rr, -rt]] on creation ops.

    Built as a rotation exp(theta (a1 a2^dag - a1^dag a2)) preceded by a pi
    phase on mode 2.
    """
    a = _ladder(d)
    eye = np.eye(d + 1)
    a1, a2 = np.kron(a, eye), np.kron(eye, a)
    theta = math.acos(math.sqrt(t))
    gen = theta * (a1 @ a2.conj().T - a1.conj().T @ a2)
    rot = expm(gen)
    flip = np.kron(eye, np.diag((-1.0) ** np.arange(d + 1)))
    return rot @ flip


def phase_unitary(phi: float, d: int) -> np.ndarray:
    return np.diag(np.exp(1j * phi * np.arange(d + 1)))


class Dense:
    """Pure state as an ndarray with one axis per mode."""

    def __init__(self, labels, d):
        self.labels = list(labels)
        self.d = d
        self.psi = np.zeros((d + 1,) * len(labels), dtype=complex)

    def set(self, occ: dict, amp: complex = 1.0):
        idx = tuple(occ.get(m, 0) for m in self.labels)
        self.psi[idx] += amp
        return self

    def bs(self, t, m1, m2):
        i, j = self.labels.index(m1), self.labels.index(m2)
        u = bs_unitary(t, self.d).reshape((self.d + 1,) * 4)
        out = np.tensordot(u, self.psi, axes=([2, 3], [i, j]))
        self.psi = np.moveaxis(out, [0, 1], [i, j])
        return self

    def phase(self, phi, m):
        i = self.labels.index(m)
        u = phase_unitary(phi, self.d)
        self.psi = np.moveaxis(np.tensordot(u, self.psi, axes=([1], [i])), 0, i)
        return self

    def probs(self):
        """Iterate over (occupation dict, probability)."""
        p = np.abs(self.psi) ** 2
        for idx in zip(*np.nonzero(p > 0)):
            yield dict(zip(self.labels, map(int, idx))), float(p[idx])


def no_click(n, eta, dark):
    return (1 - dark) * (1 - eta) ** n


def count_prob(k, n, eta, dark):
    """Probability a PNR detector registers k counts from n photons."""

    def b(j):
        return math.comb(n, j) * eta**j * (1 - eta) ** (n - j) if 0 <= j <= n else 0.0

    return (1 - dark) * b(k) + dark * b(k - 1)


def amplifier_oracle(p, t, *, eta_det=1.0, dark=0.0, pnr=True, eta_amp=1.0, rule="single_port_click", p_pair=0.0, pairs=2):
    """Herald probability and heralded efficiency of the amplifier, by brute force."""
    labels = ["inp", "anc", "meas", "env_in", "env_a", "env_o"]
    if p_pair == 0:
        d = 2
        st = Dense(labels, d).set({"inp": 1, "anc": 1})
    else:
        d = 2 * pairs
        st = Dense(labels, d)
        weights = [(1 - p_pair) * p_pair**n for n in range(pairs + 1)]
        tot = sum(weights)
        for n, w in enumerate(weights):
            st.set({"inp": n, "anc": n}, math.sqrt(w / tot))
    st.bs(1 - p, "inp", "env_in")
    st.bs(eta_amp, "anc", "env_a")
    st.bs(t, "anc", "meas")
    st.bs(0.5, "inp", "meas")
    st.bs(eta_amp, "anc", "env_o")

    def herald_weight(n1, n2):
        w1 = count_prob(1, n1, eta_det, dark) if pnr else 1 - no_click(n1, eta_det, dark)
        if rule == "single_port_click":
            return w1
        return w1 * no_click(n2, eta_det, dark)

    herald = 0.0
    with_photon = 0.0
    for occ, pr in st.probs():
        w = herald_weight(occ["inp"], occ["meas"]) * pr
        herald += w
        if occ["anc"] > 0:
            with_photon += w
    return herald, with_photon / herald


def fringe_oracle(p, t, phases):
    """Click probability at the output port after recombining with the lost mode (ideal device)."""
    labels = ["inp", "lost", "anc", "meas"]
    out = []
    for phi in phases:
        st = Dense(labels, 2).set({"inp": 1, "anc": 1})
        st.bs(1 - p, "inp", "lost")
        st.bs(t, "anc", "meas")
        st.bs(0.5, "inp", "meas")
        st.phase(phi, "anc")
        st.bs(0.5, "anc", "lost")
        herald = sum(pr for occ, pr in st.probs() if occ["inp"] == 1)
        click = sum(pr for occ, pr in st.probs() if occ["inp"] == 1 and occ["anc"] > 0)
        out.append(click / herald)
    return out


def hom_oracle(p_pair, overlap, pairs=2):
    """Coincidence probability of a TMSV (or exact pair if p_pair == 0) with threshold detectors."""
    labels = ["a", "b", "a_x", "b_x"]
    d = 2 * pairs
    st = Dense(labels, d)
    if p_pair == 0:
        st.set({"a": 1, "b": 1})
    else:
        weights = [(1 - p_pair) * p_pair**n for n in range(pairs + 1)]
        tot = sum(weights)
        for n, w in enumerate(weights):
            st.set({"a": n, "b": n}, math.sqrt(w / tot))
    st.bs(overlap, "b", "b_x")
    st.bs(0.5, "a", "b")
    st.bs(0.5, "b_x", "a_x")
    return sum(pr for occ, pr in st.probs() if occ["a"] + occ["a_x"] > 0 and occ["b"] + occ["b_x"] > 0)


def random_dense_amplitudes(rng, n_modes, cutoff, n_terms):
    occs = list(itertools.product(range(cutoff + 1), repeat=n_modes))
    pick = rng.choice(len(occs), size=min(n_terms, len(occs)), replace=False)
    amps = rng.normal(size=len(pick)) + 1j * rng.normal(size=len(pick))
    amps /= np.linalg.norm(amps)
    return {occs[i]: complex(a) for i, a in zip(pick, amps)}

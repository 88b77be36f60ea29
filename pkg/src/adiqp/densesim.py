"""Exact statevector simulation, sampling, and the lazy ancilla window.

Qubit 0 is the leftmost character of every bitstring and the first tensor
axis.  T is diag(1, e^{i pi/4}); global phases are dropped throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, Gate
from .distribution import Distribution
from .errors import (
    ConsistencyError,
    DegeneratePostselectionError,
    InputShapeError,
    ResourceLimitError,
    UnsupportedCircuitError,
)

DENSE_LIMIT = 24
LAZY_WINDOW_LIMIT = 24
OMEGA = np.exp(1j * np.pi / 4)
SQRT_HALF = 1 / math.sqrt(2)

H = np.array([[1, 1], [1, -1]], dtype=complex) * SQRT_HALF
X = np.array([[0, 1], [1, 0]], dtype=complex)


def gate_matrix(g: Gate) -> np.ndarray:
    """Dense matrix of a gate on its own targets (first target = most significant)."""
    if g.kind == "H":
        return H
    if g.kind == "X":
        return X
    if g.kind == "CZ":
        return np.diag([1, 1, 1, -1]).astype(complex)
    if g.kind == "CCZ":
        return np.diag([1] * 7 + [-1]).astype(complex)
    return np.diag([1, OMEGA ** g.t_power])


def _bits(bitstring, n: int) -> tuple[int, ...]:
    if isinstance(bitstring, str):
        bits = tuple(int(ch) for ch in bitstring)
    else:
        bits = tuple(int(b) for b in bitstring)
    if len(bits) != n or any(b not in (0, 1) for b in bits):
        raise InputShapeError(f"expected a {n}-bit outcome, got {bitstring!r}")
    return bits


def _apply_1q(psi: np.ndarray, m: np.ndarray, q: int) -> np.ndarray:
    psi = np.moveaxis(psi, q, 0)
    psi = np.tensordot(m, psi, axes=([1], [0]))
    return np.moveaxis(psi, 0, q)


def _hadamard_all(psi: np.ndarray) -> np.ndarray:
    for q in range(psi.ndim):
        psi = _apply_1q(psi, H, q)
    return psi


def _apply_phase(psi: np.ndarray, g: Gate, axes) -> None:
    """In-place diagonal gate on the given tensor axes."""
    idx = [slice(None)] * psi.ndim
    if g.kind == "CZ" or g.kind == "CCZ":
        for a in axes:
            idx[a] = 1
        psi[tuple(idx)] *= -1
    else:
        idx[axes[0]] = 1
        psi[tuple(idx)] *= OMEGA ** g.t_power


def _apply_gate(psi: np.ndarray, g: Gate) -> np.ndarray:
    if g.diagonal:
        _apply_phase(psi, g, g.targets)
        return psi
    return _apply_1q(psi, gate_matrix(g), g.targets[0])


def statevector(c: Circuit, limit: int = DENSE_LIMIT) -> np.ndarray:
    """Final pre-measurement state as an n-axis tensor (outcome flips applied)."""
    if c.n > limit:
        raise ResourceLimitError(f"{c.n} qubits exceeds the dense limit {limit}")
    psi = np.zeros((2,) * c.n, dtype=complex)
    psi[c.prep] = 1.0
    if c.sandwich:
        psi = _hadamard_all(psi)
    for g in c.body:
        psi = _apply_gate(psi, g)
    if c.sandwich:
        psi = _hadamard_all(psi)
    for q in c.flips:
        psi = np.flip(psi, axis=q)
    return psi


def amplitude(c: Circuit, out, limit: int = DENSE_LIMIT) -> complex:
    """Transition amplitude from the prepared input to outcome ``out`` (all qubits)."""
    bits = _bits(out, c.n)
    return complex(statevector(c, limit)[bits])


def postselected_tensor(c: Circuit, limit: int = DENSE_LIMIT) -> np.ndarray:
    """Amplitudes with postselected qubits fixed, axes ordered as ``c.output_register``.

    Qubits that are neither postselected nor in the output register stay as
    trailing axes so callers can marginalize them.
    """
    psi = statevector(c, limit)
    keep = [q for q in range(c.n) if q not in c.postselect]
    idx = tuple(c.postselect.get(q, slice(None)) for q in range(c.n))
    psi = psi[idx]
    order = list(c.output_register) + [q for q in keep if q not in c.output_register]
    return np.transpose(psi, [keep.index(q) for q in order])


def run_dense(c: Circuit, limit: int = DENSE_LIMIT) -> Distribution:
    """Output-register distribution, conditioned on the postselection map."""
    psi = postselected_tensor(c, limit)
    k = len(c.output_register)
    p = np.abs(psi) ** 2
    p = p.reshape((1 << k, -1)).sum(axis=1)
    success = float(p.sum())
    if success <= 1e-14:
        raise DegeneratePostselectionError("postselected branch has zero probability")
    return Distribution.from_array(p / success, success_probability=success)


def sample(c: Circuit, shots: int, seed: int, limit: int = DENSE_LIMIT) -> list[str]:
    """i.i.d. outcomes of the output register (renormalized if postselected)."""
    if shots < 1:
        raise InputShapeError("shots must be positive")
    dist = run_dense(c, limit)
    keys = sorted(dist.probs)
    p = np.array([dist.probs[k] for k in keys])
    rng = np.random.default_rng(seed)
    draws = rng.choice(len(keys), size=shots, p=p / p.sum())
    return [keys[i] for i in draws]


def unitary(c: Circuit, limit: int = 12) -> np.ndarray:
    """Full matrix of the circuit (ignores preps, postselection and flips)."""
    if c.n > limit:
        raise ResourceLimitError(f"{c.n} qubits exceeds the unitary limit {limit}")
    dim = 1 << c.n
    cols = []
    for col in range(dim):
        bits = tuple(int(b) for b in format(col, f"0{c.n}b")) if c.n else ()
        cols.append(statevector(c.with_preps(dict(enumerate(bits))).replace(flips=()), limit).ravel())
    return np.array(cols).T


# -- lazy ancilla window ---------------------------------------------------


@dataclass
class LazyAmplitude:
    """value = mantissa * 2**log2_factor, kept apart so tiny values do not underflow."""

    mantissa: complex
    log2_factor: float

    @property
    def value(self) -> complex:
        return self.mantissa * 2.0 ** self.log2_factor

    @property
    def log2_abs(self) -> float:
        if self.mantissa == 0:
            return -math.inf
        return math.log2(abs(self.mantissa)) + self.log2_factor

    def to_json(self) -> dict:
        return {"re": self.mantissa.real, "im": self.mantissa.imag, "log2_factor": self.log2_factor}


class LazyWindow:
    """State of the live qubits in the middle of a sandwich circuit.

    New qubits enter as H|prep>; retired qubits are contracted with <bit|H.
    """

    def __init__(self, limit: int = LAZY_WINDOW_LIMIT):
        self.live: list[int] = []
        self.psi = np.ones((), dtype=complex)
        self.log2_factor = 0.0
        self.scalar = 1.0 + 0j
        self.limit = limit
        self.max_width = 0

    def add(self, q: int, prep: int) -> None:
        if q in self.live:
            raise ConsistencyError(f"qubit {q} is already live")
        if len(self.live) >= self.limit:
            raise ResourceLimitError(f"live window would exceed {self.limit} qubits")
        v = np.array([1, -1 if prep else 1], dtype=complex) * SQRT_HALF
        self.psi = np.multiply.outer(self.psi, v)
        self.live.append(q)
        self.max_width = max(self.max_width, len(self.live))

    def apply(self, g: Gate) -> None:
        if not g.diagonal:
            raise UnsupportedCircuitError(f"lazy mode needs a diagonal body, got {g}")
        try:
            axes = [self.live.index(t) for t in g.targets]
        except ValueError:
            raise ConsistencyError(f"gate {g} touches a qubit outside the live window {self.live}") from None
        _apply_phase(self.psi, g, axes)

    def retire(self, q: int, bit: int) -> None:
        try:
            ax = self.live.index(q)
        except ValueError:
            raise ConsistencyError(f"qubit {q} retired while not live") from None
        bra = np.array([1, -1 if bit else 1], dtype=complex) * SQRT_HALF
        self.psi = np.tensordot(self.psi, bra, axes=([ax], [0]))
        self.live.pop(ax)

    def multiply(self, z: complex) -> None:
        self.scalar *= z

    def normalize(self) -> None:
        m = float(np.max(np.abs(self.psi))) if self.psi.size else 0.0
        if m > 0:
            e = math.floor(math.log2(m))
            self.psi = self.psi / 2.0 ** e
            self.log2_factor += e
        s = abs(self.scalar)
        if s > 0:
            e = math.floor(math.log2(s))
            self.scalar /= 2.0 ** e
            self.log2_factor += e

    def output_tensor(self, order) -> np.ndarray:
        """Remaining live qubits after the closing Hadamards, axes in ``order``."""
        if sorted(order) != sorted(self.live):
            raise ConsistencyError(f"live qubits {self.live} do not match the register {list(order)}")
        psi = _hadamard_all(self.psi.copy()) * self.scalar
        return np.transpose(psi, [self.live.index(q) for q in order])


def _trace_json(trace) -> dict:
    return trace if isinstance(trace, dict) else trace.to_json()


def _auto_schedule(c: Circuit) -> list[dict]:
    """One block per gate: add qubits at first use, retire them after last use."""
    first, last = {}, {}
    for pos, g in enumerate(c.body):
        for t in g.targets:
            first.setdefault(t, pos)
            last[t] = pos
    outs = set(c.output_register)
    sched = []
    for pos, g in enumerate(c.body):
        sched.append(
            {
                "kind": "gate",
                "gates": [pos, pos + 1],
                "new": [t for t in g.targets if first[t] == pos],
                "retire": [t for t in g.targets if last[t] == pos and t not in outs],
            }
        )
    return sched


def _pad_factor(kind: str, gates: list[Gate], qubits: list[int], c: Circuit, outcome) -> complex:
    """Closed-form contribution of a padding block (no window needed)."""
    if kind == "PadHSH":
        (b,) = qubits
        if len(gates) != 1 or gates[0].t_power != 2 or gates[0].targets != (b,):
            raise ConsistencyError(f"padding block on {b} is not a single S")
        # <s|H S H|p> = (1 + i (-1)^(s+p)) / 2
        s, p = outcome[b], c.qubits[b].prep
        return complex(0.5 * (1 + 1j * (-1) ** (s + p)))
    if kind == "PadPair":
        w, b = qubits
        if len(gates) != 1 or gates[0].kind != "CZ" or set(gates[0].targets) != {w, b}:
            raise ConsistencyError(f"padding pair {w},{b} is not a single CZ")
        if c.qubits[w].prep or c.qubits[b].prep:
            raise ConsistencyError("padding pairs start in |00>")
        sw, sb = outcome[w], outcome[b]
        # <sw sb| H(x)H CZ H(x)H |00> = (1/4) sum_ab (-1)^(ab + a sw + b sb)
        return complex(sum((-1) ** (a * b + a * sw + b * sb) for a in (0, 1) for b in (0, 1)) / 4)
    raise ConsistencyError(f"unknown padding kind {kind!r}")


def _run_window(c: Circuit, trace, out, keep_outputs: bool, limit: int):
    if not c.sandwich:
        raise UnsupportedCircuitError("lazy mode handles sandwich circuits only")
    if out is None:
        outcome = [c.postselect.get(q, 0) for q in range(c.n)]
    else:
        outcome = list(_bits(out, c.n))
    for q in c.flips:
        outcome[q] ^= 1
    if trace is not None:
        tj = _trace_json(trace)
        sched = [gd for st in tj["steps"] for gd in st["gadgets"]]
        initial = list(tj.get("inputs", []))
    else:
        sched, initial = _auto_schedule(c), []
    outs = set(c.output_register) if keep_outputs else set()

    win = LazyWindow(limit)
    seen: set[int] = set()
    done: set[int] = set()
    cursor = 0
    for q in initial:
        win.add(q, c.qubits[q].prep)
        seen.add(q)
    for blk in sched:
        start, stop = blk["gates"]
        if start != cursor:
            raise ConsistencyError(f"trace skips or repeats body gates at position {cursor}")
        cursor = stop
        gates = list(c.body[start:stop])
        if blk["kind"].startswith("Pad"):
            qs = list(blk["new"])
            for q in qs:
                if q in seen:
                    raise ConsistencyError(f"padding qubit {q} was already used")
                seen.add(q)
                done.add(q)
            win.multiply(_pad_factor(blk["kind"], gates, qs, c, outcome))
            win.normalize()
            continue
        for q in blk["new"]:
            if q in seen:
                raise ConsistencyError(f"qubit {q} enters the window twice")
            seen.add(q)
            win.add(q, c.qubits[q].prep)
        for g in gates:
            win.apply(g)
        for q in blk["retire"]:
            if q in outs:
                raise ConsistencyError(f"output qubit {q} retired early")
            win.retire(q, outcome[q])
            done.add(q)
        win.normalize()
    if cursor != len(c.body):
        raise ConsistencyError("trace does not cover the whole body")
    # Qubits no gate touched: <s|HH|p> = delta(s, p).
    for q in range(c.n):
        if q not in seen and q not in outs:
            if outcome[q] != c.qubits[q].prep:
                win.multiply(0)
            done.add(q)
        elif q not in seen:
            win.add(q, c.qubits[q].prep)
    if not keep_outputs:
        for q in list(win.live):
            win.retire(q, outcome[q])
        win.normalize()
    return win


def run_lazy(c: Circuit, trace=None, out=None, limit: int = LAZY_WINDOW_LIMIT) -> LazyAmplitude:
    """Amplitude of outcome ``out`` (default: postselection values, else 0).

    With ``trace`` (a lowering trace or its JSON) the walk follows the
    recorded gadget blocks; otherwise qubits are added at first use and
    retired after last use.
    """
    win = _run_window(c, trace, out, keep_outputs=False, limit=limit)
    z = complex(win.psi) * win.scalar
    return LazyAmplitude(z, win.log2_factor)


def lazy_output_tensor(c: Circuit, trace=None, limit: int = LAZY_WINDOW_LIMIT) -> tuple[np.ndarray, float]:
    """Output-register amplitudes with every other qubit at its postselected value.

    Returns (tensor, log2_factor) with axes ordered as ``c.output_register``.
    """
    win = _run_window(c, trace, None, keep_outputs=True, limit=limit)
    outs = list(c.output_register)
    t = win.output_tensor(outs)
    # Undo the flips on output qubits: they were folded into outcome bits only for retired qubits.
    for q in c.flips:
        if q in outs:
            t = np.flip(t, axis=outs.index(q))
    return t, win.log2_factor

"""Outcome distributions and the two error metrics (l1, multiplicative)."""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, InputShapeError


@dataclass
class Distribution:
    n_bits: int
    probs: dict[str, float] = field(default_factory=dict)
    # Probability of the postselected branch before renormalization.
    success_probability: float = 1.0

    def __post_init__(self):
        for y, p in self.probs.items():
            if len(y) != self.n_bits or set(y) - {"0", "1"}:
                raise InputShapeError(f"outcome {y!r} is not a {self.n_bits}-bit string")
            if p < 0:
                raise InputShapeError(f"negative probability for {y}")

    def __getitem__(self, y: str) -> float:
        return self.probs.get(y, 0.0)

    @property
    def total(self) -> float:
        return float(sum(self.probs.values()))

    @classmethod
    def from_array(cls, p: np.ndarray, success_probability: float = 1.0, cutoff: float = 0.0) -> "Distribution":
        """``p`` has one axis of length 2 per bit, or is flat of length 2**n."""
        flat = np.asarray(p, dtype=float).ravel()
        n = int(round(np.log2(flat.size))) if flat.size > 1 else 0
        if 1 << n != flat.size:
            raise InputShapeError("array length is not a power of two")
        probs = {format(i, f"0{n}b") if n else "": float(v) for i, v in enumerate(flat) if v > cutoff}
        return cls(n, probs, success_probability)

    def to_array(self) -> np.ndarray:
        out = np.zeros(1 << self.n_bits)
        for y, p in self.probs.items():
            out[int(y, 2) if y else 0] = p
        return out

    def marginal(self, positions) -> "Distribution":
        acc: dict[str, float] = {}
        for y, p in self.probs.items():
            k = "".join(y[i] for i in positions)
            acc[k] = acc.get(k, 0.0) + p
        return Distribution(len(positions), acc, self.success_probability)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("bitstring,probability\n")
        for y in sorted(self.probs):
            buf.write(f"{y},{self.probs[y]:.17g}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Distribution":
        rows = [r.strip() for r in text.strip().splitlines() if r.strip()]
        if rows and rows[0].replace(" ", "").lower().startswith("bitstring"):
            rows = rows[1:]
        probs: dict[str, float] = {}
        width = None
        for r in rows:
            try:
                y, p = r.split(",")[:2]
                y = y.strip()
                val = float(p)
            except ValueError:
                raise InputShapeError(f"bad CSV row {r!r}") from None
            width = len(y) if width is None else width
            probs[y] = probs.get(y, 0.0) + val
        return cls(width or 0, probs)


def _check_space(P: Distribution, Q: Distribution):
    if P.n_bits != Q.n_bits:
        raise ArgumentError(f"outcome spaces differ: {P.n_bits} vs {Q.n_bits} bits")


def l1_distance(P: Distribution, Q: Distribution) -> float:
    """Sum over outcomes of |P(y) - Q(y)|."""
    _check_space(P, Q)
    keys = set(P.probs) | set(Q.probs)
    return float(sum(abs(P[y] - Q[y]) for y in keys))


def total_variation(P: Distribution, Q: Distribution) -> float:
    return 0.5 * l1_distance(P, Q)


def multiplicative_check(P: Distribution, Q: Distribution, c: float) -> tuple[bool, str | None]:
    """Whether |P(y) - Q(y)| <= c Q(y) for all y; else the worst offender."""
    if c < 1:
        raise ArgumentError(f"multiplicative error must be >= 1, got {c}")
    _check_space(P, Q)
    worst, worst_y = 0.0, None
    for y in sorted(set(P.probs) | set(Q.probs)):
        excess = abs(P[y] - Q[y]) - c * Q[y]
        if excess > worst:
            worst, worst_y = excess, y
    return worst_y is None, worst_y

"""Degree-3 polynomials over GF(2) with no constant term.

Indices are 1-based, matching the text format::

    n 3
    L 1
    Q 1 2
    C 1 2 3
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numba
import numpy as np

from .errors import InputShapeError, ResourceLimitError

GAP_LIMIT = 24


@dataclass(frozen=True)
class PolyF2Deg3:
    n: int
    linear: tuple[int, ...] = ()
    quadratic: tuple[tuple[int, int], ...] = ()
    cubic: tuple[tuple[int, int, int], ...] = ()

    def __post_init__(self):
        if self.n < 1:
            raise InputShapeError(f"variable count must be positive, got {self.n}")
        # linear terms may be given as indices or as 1-tuples
        lin = _canonical((tuple(i) if isinstance(i, (tuple, list)) else (i,) for i in self.linear), 1, self.n)
        quad = _canonical(self.quadratic, 2, self.n)
        cub = _canonical(self.cubic, 3, self.n)
        object.__setattr__(self, "linear", tuple(m[0] for m in lin))
        object.__setattr__(self, "quadratic", quad)
        object.__setattr__(self, "cubic", cub)

    @property
    def monomials(self) -> tuple[tuple[int, ...], ...]:
        return tuple((i,) for i in self.linear) + self.quadratic + self.cubic

    def __len__(self):
        return len(self.linear) + len(self.quadratic) + len(self.cubic)

    def to_text(self) -> str:
        lines = [f"n {self.n}"]
        lines += [f"L {i}" for i in self.linear]
        lines += [f"Q {i} {j}" for i, j in self.quadratic]
        lines += [f"C {i} {j} {k}" for i, j, k in self.cubic]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "PolyF2Deg3":
        n = None
        mono: dict[str, list] = {"L": [], "Q": [], "C": []}
        arity = {"L": 1, "Q": 2, "C": 3}
        for lineno, raw in enumerate(text.splitlines(), 1):
            parts = raw.split("#", 1)[0].split()
            if not parts:
                continue
            tag, args = parts[0], parts[1:]
            try:
                vals = [int(a) for a in args]
            except ValueError:
                raise InputShapeError(f"line {lineno}: non-integer field in {raw!r}") from None
            if tag == "n":
                if len(vals) != 1 or n is not None:
                    raise InputShapeError(f"line {lineno}: bad or repeated header")
                n = vals[0]
            elif tag in arity:
                if len(vals) != arity[tag]:
                    raise InputShapeError(f"line {lineno}: {tag} takes {arity[tag]} indices")
                mono[tag].append(vals[0] if tag == "L" else tuple(vals))
            else:
                raise InputShapeError(f"line {lineno}: unknown tag {tag!r}")
        if n is None:
            raise InputShapeError("missing 'n <int>' header")
        return cls(n, tuple(mono["L"]), tuple(mono["Q"]), tuple(mono["C"]))


def _canonical(monos: Iterable[Sequence[int]], degree: int, n: int):
    out = set()
    for m in monos:
        m = tuple(sorted(int(i) for i in m))
        if len(m) != degree or len(set(m)) != degree:
            raise InputShapeError(f"monomial {m} must have {degree} distinct indices")
        if m[0] < 1 or m[-1] > n:
            raise InputShapeError(f"monomial {m} has an index outside [1, {n}]")
        if m in out:
            raise InputShapeError(f"duplicate monomial {m}")
        out.add(m)
    return tuple(sorted(out))


def _bits(x, n: int) -> tuple[int, ...]:
    if isinstance(x, str):
        if set(x) - {"0", "1"}:
            raise InputShapeError(f"not a bitstring: {x!r}")
        return tuple(int(c) for c in x)
    return tuple(int(b) & 1 for b in x)


def evaluate(f: PolyF2Deg3, x) -> int:
    """Value of ``f`` at ``x`` (a '0'/'1' string or bit sequence, x[0] = x_1)."""
    bits = _bits(x, f.n)
    if len(bits) != f.n:
        raise InputShapeError(f"expected {f.n} bits, got {len(bits)}")
    v = 0
    for m in f.monomials:
        v ^= int(all(bits[i - 1] for i in m))
    return v


def candidate_monomials(n: int) -> list[tuple[int, ...]]:
    out: list[tuple[int, ...]] = []
    for d in (1, 2, 3):
        out += list(itertools.combinations(range(1, n + 1), d))
    return out


def random_poly(n: int, seed: int) -> PolyF2Deg3:
    """Each candidate monomial is kept with probability 1/2."""
    if n < 1:
        raise InputShapeError("n must be positive")
    rng = np.random.default_rng(seed)
    cands = candidate_monomials(n)
    keep = rng.integers(0, 2, size=len(cands))
    chosen = [m for m, k in zip(cands, keep) if k]
    return PolyF2Deg3(
        n,
        tuple(m[0] for m in chosen if len(m) == 1),
        tuple(m for m in chosen if len(m) == 2),
        tuple(m for m in chosen if len(m) == 3),
    )


def all_polys(n: int) -> Iterator[PolyF2Deg3]:
    """Every polynomial of the family on ``n`` variables (2**#candidates of them)."""
    cands = candidate_monomials(n)
    if len(cands) > 20:
        raise ResourceLimitError(f"2^{len(cands)} polynomials is too many to enumerate")
    for mask in range(1 << len(cands)):
        chosen = [m for b, m in enumerate(cands) if mask >> b & 1]
        yield PolyF2Deg3(
            n,
            tuple(m[0] for m in chosen if len(m) == 1),
            tuple(m for m in chosen if len(m) == 2),
            tuple(m for m in chosen if len(m) == 3),
        )


# Bit i-1 of the integer state holds x_i.
def _neighbour_masks(f: PolyF2Deg3):
    """CSR layout: for variable v, masks of the *other* variables of every monomial with v."""
    per_var: list[list[int]] = [[] for _ in range(f.n)]
    for m in f.monomials:
        for v in m:
            mask = 0
            for u in m:
                if u != v:
                    mask |= 1 << (u - 1)
            per_var[v - 1].append(mask)
    offsets = np.zeros(f.n + 1, dtype=np.int64)
    for v, ms in enumerate(per_var):
        offsets[v + 1] = offsets[v] + len(ms)
    masks = np.array([m for ms in per_var for m in ms], dtype=np.int64)
    return offsets, masks


@numba.njit(cache=True)
def _gray_gap(n, offsets, masks):
    x = 0
    fx = 0
    ones = 0
    for i in range(1, 1 << n):
        # Gray code i-1 -> i flips the lowest set bit position of i.
        v = 0
        t = i
        while t & 1 == 0:
            t >>= 1
            v += 1
        x ^= 1 << v
        delta = 0
        for j in range(offsets[v], offsets[v + 1]):
            m = masks[j]
            if x & m == m:
                delta ^= 1
        fx ^= delta
        ones += fx
    return (1 << n) - 2 * ones


def gap(f: PolyF2Deg3, limit: int = GAP_LIMIT) -> int:
    """|f^-1(0)| - |f^-1(1)| by Gray-code enumeration.

    Each step flips one variable and re-evaluates only the monomials that
    contain it.
    """
    if f.n > limit:
        raise ResourceLimitError(f"n = {f.n} exceeds the enumeration limit {limit}")
    offsets, masks = _neighbour_masks(f)
    return int(_gray_gap(f.n, offsets, masks))


def gap_naive(f: PolyF2Deg3) -> int:
    """Sum of (-1)^f(x) over all inputs, evaluating every monomial on every x."""
    xs = np.arange(1 << f.n, dtype=np.int64)
    val = np.zeros(xs.shape, dtype=np.int8)
    for m in f.monomials:
        term = np.ones(xs.shape, dtype=np.int8)
        for i in m:
            term &= ((xs >> (i - 1)) & 1).astype(np.int8)
        val ^= term
    return int((1 << f.n) - 2 * int(val.sum()))


def anticoncentration_fraction(n: int, samples: int, seed: int, limit: int = GAP_LIMIT) -> float:
    """Fraction of random f with gap(f)^2 >= 2^(n-1)."""
    return anticoncentration_gaps(n, samples, seed, limit)[0]


def anticoncentration_gaps(n: int, samples: int, seed: int, limit: int = GAP_LIMIT):
    if samples < 1:
        raise InputShapeError("samples must be positive")
    ss = np.random.SeedSequence(seed)
    seeds = ss.generate_state(samples, dtype=np.uint64)
    gaps = np.array([gap(random_poly(n, int(s)), limit) for s in seeds], dtype=np.int64)
    hits = gaps.astype(float) ** 2 >= 2.0 ** (n - 1)
    return float(hits.mean()), gaps

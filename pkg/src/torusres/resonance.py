"""Resonance counting and Diophantine margin scans over integer mode pairs.

A mode pair ``(a, b)`` with parameters ``(x, y)`` is resonant at exponent
``v`` when the distance from ``a**2 * x + b**2 * y`` to the nearest integer
is strictly below ``max(a**2, b**2) ** -v``.  The distance is computed
exactly on the 128-bit fixed-point grid of :mod:`torusres.fixedpoint`: the
64-bit square times the 128-bit raw fraction is a 192-bit product reduced
modulo ``2**128``, with no rounding anywhere.  The threshold is quantized
once onto the same grid (see :func:`resonance_threshold_raw`), so the
predicate is a comparison of two exact integers and is reproducible across
platforms, thread counts and reruns.

Grid scans are vectorized with numpy on two unsigned 64-bit limbs per
value; ``uint64`` addition and negation wrap modulo ``2**64``, which gives
exact multi-limb arithmetic with explicit carries.  Scans partition rows
across threads and reduce in row order, so results do not depend on the
worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, NamedTuple, Sequence, TypeVar

import numpy as np

from torusres.fixedpoint import (
    BITS,
    HALF,
    MASK,
    MODULUS,
    FixedFraction,
    parse_real,
    split_real,
)

# a**2 must fit in one unsigned 64-bit limb
MAX_INDEX = (1 << 32) - 1

# scans process this many rows per vector operation; large enough that the
# array work dominates the interpreter and releases the GIL for real
_TILE_ROWS = 64

_LIMB_BITS = 64
_LIMB_MASK = (1 << _LIMB_BITS) - 1
# raw distances never exceed 2**127, so this threshold means "always resonant"
_THRESHOLD_CAP = HALF + 1
_INT_BOUND = 1 << 63

_T = TypeVar("_T")


class ModeIndex(NamedTuple):
    """Integer Fourier mode (a, b, c)."""

    a: int
    b: int
    c: int


@dataclass(frozen=True)
class DenominatorParams:
    """The pair (x, y) entering the denominator x*a**2 + y*b**2 + c.

    Each coordinate is split into a signed integer part and an exact
    128-bit fractional part.  Resonance predicates depend only on the
    fractional parts (integer parts shift the optimal c), but both are kept
    so denominator values are exact.
    """

    x_int: int
    x_frac: FixedFraction
    y_int: int
    y_frac: FixedFraction

    def __post_init__(self) -> None:
        for name in ("x_int", "y_int"):
            value = getattr(self, name)
            if not isinstance(value, int):
                raise TypeError(f"{name} must be int, got {type(value).__name__}")
            if not -_INT_BOUND <= value < _INT_BOUND:
                raise OverflowError(f"{name} out of signed 64-bit range: {value}")

    @classmethod
    def from_floats(cls, x: float, y: float) -> "DenominatorParams":
        """Exact split of two finite doubles."""
        xi, xf = split_real(x)
        yi, yf = split_real(y)
        return cls(xi, xf, yi, yf)

    @classmethod
    def from_fractions(cls, x: Fraction, y: Fraction) -> "DenominatorParams":
        """Floor each exact rational onto the 128-bit grid."""
        xi = x.numerator // x.denominator
        yi = y.numerator // y.denominator
        return cls(xi, FixedFraction.from_fraction(x - xi), yi, FixedFraction.from_fraction(y - yi))

    @classmethod
    def from_strings(cls, x_text: str, y_text: str) -> "DenominatorParams":
        """Parse two real literals (decimal, rational, sqrt:N or fp:0x...)."""
        xi, xf = parse_real(x_text)
        yi, yf = parse_real(y_text)
        return cls(xi, xf, yi, yf)

    @property
    def x_float(self) -> float:
        return float(self.x_int) + self.x_frac.to_float()

    @property
    def y_float(self) -> float:
        return float(self.y_int) + self.y_frac.to_float()

    def to_json_dict(self) -> dict:
        """Exact serialization; fractional parts as canonical hex strings."""
        return {
            "x_int": self.x_int,
            "x_frac": self.x_frac.hex(),
            "y_int": self.y_int,
            "y_frac": self.y_frac.hex(),
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "DenominatorParams":
        xi, xf = parse_real(obj["x_frac"])
        yi, yf = parse_real(obj["y_frac"])
        if xi or yi:
            raise ValueError("fractional fields must parse to values in [0, 1)")
        return cls(int(obj["x_int"]), xf, int(obj["y_int"]), yf)


@dataclass(frozen=True)
class ResonanceWitness:
    """One solution pair of the resonance inequality.

    ``dist`` and ``threshold`` are the correctly rounded doubles of the
    exact quantities; the strict comparison was decided on the exact grid,
    so the doubles may coincide even though the exact values do not.
    """

    a: int
    b: int
    dist: float
    threshold: float
    nearest_c: int


@dataclass(frozen=True)
class CountingReport:
    """Resonance count over 1 <= a, b <= k with the main-term prediction."""

    k: int
    v: float
    count: int
    predicted: float
    witnesses: tuple[ResonanceWitness, ...] | None = None

    def to_json_dict(self) -> dict:
        return {
            "k": self.k,
            "v": self.v,
            "count": self.count,
            "predicted": self.predicted,
            "witness_count": None if self.witnesses is None else len(self.witnesses),
        }


@dataclass(frozen=True)
class MarginScanResult:
    """Minimum weighted margin over a mode grid and where it is attained."""

    min_margin: float
    mode: ModeIndex

    def to_json_dict(self) -> dict:
        return {
            "min_margin": self.min_margin,
            "argmin": [self.mode.a, self.mode.b, self.mode.c],
        }


@dataclass(frozen=True)
class DyadicBlock:
    """Resonance count restricted to max(a, b) in the half-open [lo, hi)."""

    j: int
    lo: int
    hi: int
    count: int

    def to_json_dict(self) -> dict:
        return {"j": self.j, "lo": self.lo, "hi": self.hi, "count": self.count}


def _checked_square(n: int) -> int:
    if abs(n) > MAX_INDEX:
        raise OverflowError(f"square of mode index {n} exceeds 64 bits")
    return n * n


def _check_v(v: float) -> float:
    v = float(v)
    if not math.isfinite(v) or v <= 0.0:
        raise ValueError(f"exponent v must be finite and positive: {v!r}")
    return v


def _check_k(k: int, minimum: int = 1) -> int:
    if k < minimum:
        raise ValueError(f"k must be >= {minimum}: {k}")
    if k > MAX_INDEX:
        raise OverflowError(f"k**2 exceeds 64 bits: {k}")
    return k


def _mode_frac_raw(params: DenominatorParams, a2: int, b2: int) -> tuple[int, int]:
    """Exact split of a2*x + b2*y into (integer part, raw fractional part)."""
    total = a2 * params.x_frac.raw + b2 * params.y_frac.raw
    base = a2 * params.x_int + b2 * params.y_int + (total >> BITS)
    return base, total & MASK


def mode_distance(params: DenominatorParams, a: int, b: int) -> tuple[float, int]:
    """Distance from a**2*x + b**2*y to the nearest integer, and that integer's negation.

    Returns ``(dist, c)`` with ``dist`` the correctly rounded double of the
    exact grid distance and ``c`` the integer minimizing
    ``|a**2*x + b**2*y + c|``; exact half-integer values round away from the
    integer part, i.e. value 2.5 yields c = -3.
    """
    a2 = _checked_square(a)
    b2 = _checked_square(b)
    base, frac = _mode_frac_raw(params, a2, b2)
    dist = min(frac, MODULUS - frac) if frac else 0
    nearest = base + 1 if frac >= HALF else base
    return dist / MODULUS, -nearest


def denominator_value(params: DenominatorParams, mode: ModeIndex) -> float:
    """Signed value of x*a**2 + y*b**2 + c via the exact fixed-point path.

    The fractional part is exact; the only rounding is the final conversion
    of (integer part, fraction) to a double.
    """
    a, b, c = mode
    if a == 0 and b == 0 and c == 0:
        raise ValueError("denominator is undefined at the zero mode")
    if not -_INT_BOUND <= c < _INT_BOUND:
        raise OverflowError(f"c out of signed 64-bit range: {c}")
    base, frac = _mode_frac_raw(params, _checked_square(a), _checked_square(b))
    return float(base + c) + frac / MODULUS


def resonance_threshold_raw(m2: int, v: float) -> int:
    """Threshold max(a**2, b**2)**-v quantized onto the 128-bit grid.

    Returns ``floor(m2**-v * 2**128)`` clamped to ``[1, 2**127 + 1]``.
    ``math.ldexp`` scales by an exact power of two, so the floor is exact.
    The lower clamp keeps only exact integer hits resonant once the true
    threshold falls below the grid; the upper clamp saturates the predicate
    because raw distances never exceed ``2**127``.
    """
    raw = int(math.ldexp(math.pow(m2, -v), BITS))
    return min(max(raw, 1), _THRESHOLD_CAP)


def predicted_count(k: int, v: float) -> float:
    """Main-term prediction (sum_{h=1}^{k} h**-v)**2, compensated summation."""
    _check_k(k)
    _check_v(v)
    total = math.fsum(math.pow(h, -v) for h in range(1, k + 1))
    return total * total


def _split_limbs(value: int) -> tuple[np.uint64, np.uint64]:
    return np.uint64(value >> _LIMB_BITS), np.uint64(value & _LIMB_MASK)


class _ScanTables:
    """Per-scan precomputed limb tables, shared read-only across threads."""

    __slots__ = ("params", "v", "k", "sq", "ty_hi", "ty_lo", "th_hi", "th_lo", "b_u64")

    def __init__(self, params: DenominatorParams, v: float, k: int):
        self.params = params
        self.v = v
        self.k = k
        y_raw = params.y_frac.raw
        self.sq = [i * i for i in range(k + 1)]
        self.ty_hi = np.empty(k + 1, dtype=np.uint64)
        self.ty_lo = np.empty(k + 1, dtype=np.uint64)
        self.th_hi = np.empty(k + 1, dtype=np.uint64)
        self.th_lo = np.empty(k + 1, dtype=np.uint64)
        for i in range(k + 1):
            frac = (self.sq[i] * y_raw) & MASK
            self.ty_hi[i] = frac >> _LIMB_BITS
            self.ty_lo[i] = frac & _LIMB_MASK
            th = resonance_threshold_raw(self.sq[i], v) if i else 0
            self.th_hi[i] = th >> _LIMB_BITS
            self.th_lo[i] = th & _LIMB_MASK
        self.b_u64 = np.arange(k + 1, dtype=np.uint64)

    def row_distance_limbs(self, a: int, b_lo: int) -> tuple[np.ndarray, np.ndarray]:
        """Raw distance limbs of a**2*x + b**2*y for b in [b_lo, k]."""
        sx = (self.sq[a] * self.params.x_frac.raw) & MASK
        sxh, sxl = _split_limbs(sx)
        ty_lo = self.ty_lo[b_lo:]
        lo = ty_lo + sxl
        hi = self.ty_hi[b_lo:] + sxh + (lo < ty_lo)
        upper = hi >= np.uint64(1 << 63)
        zero = np.uint64(0)
        neg_lo = zero - lo
        neg_hi = zero - hi - (lo != zero)
        d_lo = np.where(upper, neg_lo, lo)
        d_hi = np.where(upper, neg_hi, hi)
        return d_hi, d_lo

    def row_resonant(self, a: int) -> np.ndarray:
        """Boolean resonance mask over b = 1..k for one row a."""
        d_hi, d_lo = self.row_distance_limbs(a, 1)
        tha = resonance_threshold_raw(self.sq[a], self.v)
        below = self.b_u64[1:] <= np.uint64(a)
        t_hi = np.where(below, np.uint64(tha >> _LIMB_BITS), self.th_hi[1:])
        t_lo = np.where(below, np.uint64(tha & _LIMB_MASK), self.th_lo[1:])
        return (d_hi < t_hi) | ((d_hi == t_hi) & (d_lo < t_lo))

    def tile_resonant(self, a_lo: int, a_hi: int) -> tuple[np.ndarray, np.ndarray]:
        """Resonance mask and max(a, b) for rows a_lo <= a < a_hi, b = 1..k.

        Both outputs are (a_hi - a_lo, k) arrays indexed by (a - a_lo, b - 1).
        The predicate is identical to the row path; tiles exist so the array
        work dominates the per-row interpreter cost and releases the GIL.
        """
        x_raw = self.params.x_frac.raw
        n = a_hi - a_lo
        tx_hi = np.empty(n, dtype=np.uint64)
        tx_lo = np.empty(n, dtype=np.uint64)
        for i in range(n):
            frac = (self.sq[a_lo + i] * x_raw) & MASK
            tx_hi[i] = frac >> _LIMB_BITS
            tx_lo[i] = frac & _LIMB_MASK
        col_hi = tx_hi[:, None]
        col_lo = tx_lo[:, None]
        lo = col_lo + self.ty_lo[None, 1:]
        hi = col_hi + self.ty_hi[None, 1:] + (lo < col_lo)
        upper = hi >= np.uint64(1 << 63)
        zero = np.uint64(0)
        d_lo = np.where(upper, zero - lo, lo)
        d_hi = np.where(upper, zero - hi - (lo != zero), hi)
        m_max = np.maximum(
            np.arange(a_lo, a_hi, dtype=np.int64)[:, None],
            np.arange(1, self.k + 1, dtype=np.int64)[None, :],
        )
        t_hi = self.th_hi[m_max]
        t_lo = self.th_lo[m_max]
        res = (d_hi < t_hi) | ((d_hi == t_hi) & (d_lo < t_lo))
        return res, m_max


def _chunk_ranges(lo: int, hi: int, parts: int) -> list[tuple[int, int]]:
    span = hi - lo
    parts = max(1, min(parts, span))
    step = -(-span // parts)
    return [(start, min(start + step, hi)) for start in range(lo, hi, step)]


def _run_ranges(
    fn: Callable[[int, int], _T], ranges: Sequence[tuple[int, int]], threads: int
) -> list[_T]:
    """Evaluate fn over row ranges, preserving range order in the results."""
    if threads <= 1 or len(ranges) <= 1:
        return [fn(lo, hi) for lo, hi in ranges]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(fn, lo, hi) for lo, hi in ranges]
        return [f.result() for f in futures]


def _check_threads(threads: int) -> int:
    if threads < 1:
        raise ValueError(f"threads must be >= 1: {threads}")
    return threads


def count_resonances(
    params: DenominatorParams,
    v: float,
    k: int,
    retain_witnesses: bool = False,
    *,
    threads: int = 1,
) -> CountingReport:
    """Count pairs 1 <= a, b <= k with ||a**2*x + b**2*y|| < max(a**2,b**2)**-v.

    The inequality is strict and decided exactly (see module docstring).
    Witness retention is optional because the list has one entry per
    resonant pair; for degenerate parameters that is k**2 entries.
    """
    v = _check_v(v)
    k = _check_k(k)
    threads = _check_threads(threads)
    tables = _ScanTables(params, v, k)

    def scan(lo: int, hi: int) -> tuple[int, list[np.ndarray]]:
        part = 0
        pairs: list[np.ndarray] = []
        for t_lo in range(lo, hi, _TILE_ROWS):
            res, _ = tables.tile_resonant(t_lo, min(t_lo + _TILE_ROWS, hi))
            part += int(np.count_nonzero(res))
            if retain_witnesses:
                found = np.argwhere(res)
                if found.size:
                    pairs.append(found + (t_lo, 1))
        return part, pairs

    results = _run_ranges(scan, _chunk_ranges(1, k + 1, threads), threads)
    count = sum(part for part, _ in results)
    pair_arrays = [arr for _, pairs in results for arr in pairs]

    witnesses: tuple[ResonanceWitness, ...] | None = None
    if retain_witnesses:
        found = []
        for arr in pair_arrays:
            for a, b in arr.tolist():
                dist, nearest_c = mode_distance(params, a, b)
                threshold = math.pow(max(a * a, b * b), -v)
                found.append(ResonanceWitness(a, b, dist, threshold, nearest_c))
        witnesses = tuple(found)
    return CountingReport(k=k, v=v, count=count, predicted=predicted_count(k, v), witnesses=witnesses)


def resonance_counts_by_max(
    params: DenominatorParams, v: float, k: int, *, threads: int = 1
) -> np.ndarray:
    """Resonance counts grouped by m = max(a, b), as an int64 array of length k+1.

    Entry m counts the resonant pairs with max(a, b) == m, so cumulative
    sums give the counting function at every cutoff <= k in one scan.
    """
    v = _check_v(v)
    k = _check_k(k)
    threads = _check_threads(threads)
    tables = _ScanTables(params, v, k)

    def scan(lo: int, hi: int) -> np.ndarray:
        by_max = np.zeros(k + 1, dtype=np.int64)
        for t_lo in range(lo, hi, _TILE_ROWS):
            res, m_max = tables.tile_resonant(t_lo, min(t_lo + _TILE_ROWS, hi))
            sel = m_max[res]
            if sel.size:
                by_max += np.bincount(sel, minlength=k + 1)
        return by_max

    parts = _run_ranges(scan, _chunk_ranges(1, k + 1, threads), threads)
    total = parts[0]
    for part in parts[1:]:
        total += part
    return total


def dyadic_block_counts(
    params: DenominatorParams, v: float, k_max: int, *, threads: int = 1
) -> list[DyadicBlock]:
    """Resonance counts per dyadic block [2**j, 2**(j+1)) of max(a, b).

    The blocks partition [1, k_max]; the last block is truncated at k_max
    when k_max + 1 is not a power of two.
    """
    if k_max < 2:
        raise ValueError(f"k_max must be >= 2: {k_max}")
    by_max = resonance_counts_by_max(params, v, k_max, threads=threads)
    blocks = []
    j = 0
    while (1 << j) <= k_max:
        lo = 1 << j
        hi = min(1 << (j + 1), k_max + 1)
        blocks.append(DyadicBlock(j=j, lo=lo, hi=hi, count=int(by_max[lo:hi].sum())))
        j += 1
    return blocks


def _weights(k: int, v: float) -> np.ndarray:
    """max(a**2, b**2)**v for m = 0..k as doubles (index by max(a, b))."""
    m = np.arange(k + 1, dtype=np.float64)
    return np.power(m * m, v)


def margin_scan(
    params: DenominatorParams, v: float, k: int, *, threads: int = 1
) -> MarginScanResult:
    """Minimize |x*a**2 + y*b**2 + c| * max(a**2, b**2)**v over the grid.

    The grid is 0 <= a, b <= k without (0, 0) (pure time modes have
    denominator |c| >= 1 and cannot shrink the margin), with c chosen
    optimally per pair.  The returned margin is the largest constant for
    which the lower bound max(a**2,b**2)**-v * K holds on the scanned
    range; it is 0 exactly when some scanned denominator vanishes.  Ties
    are broken toward the lexicographically smallest (a, b).
    """
    v = _check_v(v)
    k = _check_k(k)
    threads = _check_threads(threads)
    tables = _ScanTables(params, v, k)
    weights = _weights(k, v)
    scale_hi = math.ldexp(1.0, -_LIMB_BITS)
    scale_lo = math.ldexp(1.0, -BITS)

    def scan(lo: int, hi: int) -> tuple[float, int, int]:
        best = (math.inf, 0, 0)
        for a in range(lo, hi):
            d_hi, d_lo = tables.row_distance_limbs(a, 0)
            dist = d_hi.astype(np.float64) * scale_hi + d_lo.astype(np.float64) * scale_lo
            w = np.where(tables.b_u64 <= np.uint64(a), weights[a], weights)
            margin = np.where((d_hi == 0) & (d_lo == 0), 0.0, dist * w)
            if a == 0:
                margin[0] = math.inf
            i = int(np.argmin(margin))
            value = float(margin[i])
            if value < best[0]:
                best = (value, a, i)
        return best

    results = _run_ranges(scan, _chunk_ranges(0, k + 1, threads), threads)
    _, a, b = min(results, key=lambda t: (t[0], t[1], t[2]))
    dist, nearest_c = mode_distance(params, a, b)
    margin = 0.0 if dist == 0.0 else dist * math.pow(max(a * a, b * b), v)
    return MarginScanResult(min_margin=margin, mode=ModeIndex(a, b, nearest_c))


class _WaveTables:
    """Limb and integer tables for the wave-form margins over b = 1..k."""

    __slots__ = ("params", "k", "sq", "ty_hi", "ty_lo", "ty_int", "b_u64")

    def __init__(self, params: DenominatorParams, k: int):
        self.params = params
        self.k = k
        y_raw = params.y_frac.raw
        self.sq = [i * i for i in range(k + 1)]
        self.ty_hi = np.empty(k, dtype=np.uint64)
        self.ty_lo = np.empty(k, dtype=np.uint64)
        ty_int = np.empty(k, dtype=np.int64)
        for b in range(1, k + 1):
            b2 = self.sq[b]
            full = b2 * y_raw
            frac = full & MASK
            self.ty_hi[b - 1] = frac >> _LIMB_BITS
            self.ty_lo[b - 1] = frac & _LIMB_MASK
            ty_int[b - 1] = b2 * params.y_int + (full >> BITS)
        self.ty_int = ty_int
        self.b_u64 = np.arange(1, k + 1, dtype=np.uint64)

    def row_value(self, a: int) -> tuple[np.ndarray, np.ndarray]:
        """(integer part, fractional double) of a**2*x + b**2*y for b = 1..k."""
        a2 = self.sq[a]
        full = a2 * self.params.x_frac.raw
        sxh, sxl = _split_limbs(full & MASK)
        lo = self.ty_lo + sxl
        carry1 = lo < sxl
        hi0 = self.ty_hi + sxh
        carry2 = hi0 < sxh
        hi = hi0 + carry1
        carry3 = hi < hi0
        base = (
            self.ty_int
            + np.int64(a2 * self.params.x_int + (full >> BITS))
            + carry2.astype(np.int64)
            + carry3.astype(np.int64)
        )
        frac = hi.astype(np.float64) * math.ldexp(1.0, -_LIMB_BITS)
        frac += lo.astype(np.float64) * math.ldexp(1.0, -BITS)
        return base, frac


def _check_wave_range(params: DenominatorParams, k: int) -> None:
    # row integer parts are held in int64 inside the kernel
    span = k * k * (abs(params.x_int) + abs(params.y_int) + 2)
    if span >= 1 << 62:
        raise OverflowError("k**2 * (|x| + |y|) exceeds the 64-bit integer budget")


def wave_margin_scan(
    params: DenominatorParams,
    v: float,
    k: int,
    form: str = "quadratic",
    *,
    threads: int = 1,
) -> MarginScanResult:
    """Wave-equation margin over 1 <= a, b <= k with optimal nonnegative c.

    ``form="quadratic"`` minimizes |a**2*x + b**2*y - c**2| * max(a**2,b**2)**v
    with c the rounded square root of the value and its neighbors;
    ``form="factored"`` minimizes |sqrt(a**2*x + b**2*y) - c| * max(a**2,b**2)**v
    and requires x, y >= 0 so the radicand is nonnegative.  The reported c
    is the nonnegative representative (c and -c are equivalent).
    """
    v = _check_v(v)
    k = _check_k(k)
    threads = _check_threads(threads)
    if form not in ("quadratic", "factored"):
        raise ValueError(f"form must be 'quadratic' or 'factored': {form!r}")
    factored = form == "factored"
    if factored and (params.x_int < 0 or params.y_int < 0):
        raise ValueError("factored form requires x >= 0 and y >= 0")
    _check_wave_range(params, k)
    tables = _WaveTables(params, k)
    weights = _weights(k, v)
    w_tail = weights[1:]

    def scan(lo: int, hi: int) -> tuple[float, int, int, int]:
        best = (math.inf, 0, 0, 0)
        for a in range(lo, hi):
            base, frac = tables.row_value(a)
            value = base.astype(np.float64) + frac
            root = np.sqrt(np.maximum(value, 0.0))
            if factored:
                cands = [np.maximum(np.floor(root) + shift, 0.0) for shift in (-1.0, 0.0, 1.0, 2.0)]
                margins = np.stack([np.abs(root - c) for c in cands])
                c_stack = np.stack(cands).astype(np.int64)
            else:
                c0 = root.astype(np.int64)
                c_stack = np.stack([np.maximum(c0 + shift, 0) for shift in (-1, 0, 1, 2)])
                margins = np.stack(
                    [np.abs((base - c * c).astype(np.float64) + frac) for c in c_stack]
                )
            choice = margins.argmin(axis=0)
            cols = np.arange(k)
            row_margin = margins[choice, cols]
            w = np.where(tables.b_u64 <= np.uint64(a), weights[a], w_tail)
            weighted = row_margin * w
            i = int(np.argmin(weighted))
            val = float(weighted[i])
            if val < best[0]:
                best = (val, a, i + 1, int(c_stack[choice[i], i]))
        return best

    results = _run_ranges(scan, _chunk_ranges(1, k + 1, threads), threads)
    _, a, b, c = min(results, key=lambda t: (t[0], t[1], t[2]))
    base, frac_raw = _mode_frac_raw(params, a * a, b * b)
    weight = math.pow(max(a * a, b * b), v)
    frac = frac_raw / MODULUS
    if factored:
        margin = abs(math.sqrt(base + frac) - c) * weight
    else:
        margin = abs(float(base - c * c) + frac) * weight
    return MarginScanResult(min_margin=margin, mode=ModeIndex(a, b, c))

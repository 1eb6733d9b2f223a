"""Truncated Fourier fields on the spacetime torus and the spectral solve.

Fields live on the cubic index box ``|a|, |b|, |c| <= M`` as dense complex
arrays.  The forced Schrodinger operator acts diagonally in this basis:
mode ``(a, b, c)`` is multiplied by ``-(2*pi*hbar/gamma)`` times the
denominator ``x*a**2 + y*b**2 + c``, where ``(x, y)`` is the geometry
reduction ``x = pi*hbar*gamma/(mass*alpha**2)`` and likewise for ``y``.
Solving divides by the same quantity, so the two functions are exact
algebraic inverses mode by mode; denominators are evaluated through the
exact fixed-point path of :mod:`torusres.resonance` so the solver and the
resonance scanner agree about which modes are dangerous.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Union

import numpy as np
from scipy.signal import fftconvolve

from torusres.fixedpoint import MODULUS
from torusres.resonance import DenominatorParams, ModeIndex, _mode_frac_raw


class SolvabilityError(ValueError):
    """The forcing has a nonzero mean, so no periodic solution exists."""


class ResonanceError(ValueError):
    """A required mode sits on a denominator too small to divide by."""

    def __init__(self, message: str, mode: ModeIndex):
        super().__init__(message)
        self.mode = mode


@dataclass(frozen=True)
class TorusGeometry:
    """Physical torus parameters: lengths alpha, beta and time period gamma."""

    alpha: float
    beta: float
    gamma: float
    mass: float = 1.0
    hbar: float = 1.0

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "gamma", "mass", "hbar"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"{name} must be finite and positive: {value!r}")

    def reduce(self) -> DenominatorParams:
        """Denominator parameters (x, y) governing the mode denominators."""
        x = math.pi * self.hbar * self.gamma / (self.mass * self.alpha**2)
        y = math.pi * self.hbar * self.gamma / (self.mass * self.beta**2)
        return DenominatorParams.from_floats(x, y)


@dataclass(frozen=True)
class ReducedGeometry:
    """Geometry given directly by (x, y); scaled units gamma = 2*pi, hbar = 1.

    Useful when only the denominator parameters matter, e.g. to hand the
    solver an exact fixed-point (x, y) produced elsewhere.
    """

    params: DenominatorParams
    gamma: float = 2.0 * math.pi
    hbar: float = 1.0

    def __post_init__(self) -> None:
        for name in ("gamma", "hbar"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"{name} must be finite and positive: {value!r}")

    def reduce(self) -> DenominatorParams:
        return self.params


Geometry = Union[TorusGeometry, ReducedGeometry]


class FourierField:
    """Dense complex coefficients on the box |a|, |b|, |c| <= box_radius.

    Index (a, b, c) maps to array position (a + M, b + M, c + M).  Fields
    are treated as immutable values once built; operations return new
    instances.  A field tagged real-valued satisfies the exact conjugate
    symmetry coeff(-a,-b,-c) == conj(coeff(a,b,c)).
    """

    __slots__ = ("box_radius", "coefficients", "real_tagged")

    def __init__(
        self,
        box_radius: int,
        coefficients: np.ndarray | None = None,
        real_tagged: bool = False,
    ):
        if box_radius < 0:
            raise ValueError(f"box_radius must be nonnegative: {box_radius}")
        side = 2 * box_radius + 1
        if coefficients is None:
            coefficients = np.zeros((side, side, side), dtype=np.complex128)
        else:
            coefficients = np.asarray(coefficients, dtype=np.complex128)
            if coefficients.shape != (side, side, side):
                raise ValueError(
                    f"coefficients shape {coefficients.shape} does not match box radius {box_radius}"
                )
        self.box_radius = box_radius
        self.coefficients = coefficients
        self.real_tagged = bool(real_tagged)
        if self.real_tagged and not self._exactly_symmetric():
            raise ValueError("field tagged real-valued lacks exact conjugate symmetry")

    def _exactly_symmetric(self) -> bool:
        flipped = np.conj(self.coefficients[::-1, ::-1, ::-1])
        return bool(np.array_equal(self.coefficients, flipped))

    @classmethod
    def zeros(cls, box_radius: int, real_tagged: bool = False) -> "FourierField":
        return cls(box_radius, None, real_tagged)

    @classmethod
    def from_modes(
        cls,
        box_radius: int,
        modes: Iterator[tuple[int, int, int, complex]] | list,
        real_tagged: bool = False,
    ) -> "FourierField":
        field = np.zeros((2 * box_radius + 1,) * 3, dtype=np.complex128)
        seen = set()
        for a, b, c, value in modes:
            if max(abs(a), abs(b), abs(c)) > box_radius:
                raise ValueError(f"mode ({a}, {b}, {c}) outside box radius {box_radius}")
            if (a, b, c) in seen:
                raise ValueError(f"duplicate mode ({a}, {b}, {c})")
            seen.add((a, b, c))
            field[a + box_radius, b + box_radius, c + box_radius] = value
        return cls(box_radius, field, real_tagged)

    def get(self, a: int, b: int, c: int) -> complex:
        m = self.box_radius
        if max(abs(a), abs(b), abs(c)) > m:
            return 0j
        return complex(self.coefficients[a + m, b + m, c + m])

    def with_mode(self, a: int, b: int, c: int, value: complex) -> "FourierField":
        """Copy of the field with one coefficient replaced; drops the real tag."""
        m = self.box_radius
        if max(abs(a), abs(b), abs(c)) > m:
            raise ValueError(f"mode ({a}, {b}, {c}) outside box radius {m}")
        coeff = self.coefficients.copy()
        coeff[a + m, b + m, c + m] = value
        return FourierField(m, coeff, real_tagged=False)

    def iter_nonzero(self) -> Iterator[tuple[int, int, int, complex]]:
        """Nonzero modes in lexicographic (a, b, c) order."""
        m = self.box_radius
        for ia, ib, ic in np.argwhere(self.coefficients != 0):
            yield (
                int(ia) - m,
                int(ib) - m,
                int(ic) - m,
                complex(self.coefficients[ia, ib, ic]),
            )

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coefficients)))

    def to_json_dict(self) -> dict:
        modes = [
            [a, b, c, value.real, value.imag] for a, b, c, value in self.iter_nonzero()
        ]
        return {
            "box_radius": self.box_radius,
            "real_tagged": self.real_tagged,
            "modes": modes,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "FourierField":
        try:
            box_radius = int(obj["box_radius"])
            real_tagged = bool(obj["real_tagged"])
            raw_modes = obj["modes"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed field object: {exc}") from exc
        modes = []
        for entry in raw_modes:
            if len(entry) != 5:
                raise ValueError(f"mode entry must be [a, b, c, re, im]: {entry!r}")
            a, b, c, re, im = entry
            modes.append((int(a), int(b), int(c), complex(float(re), float(im))))
        return cls.from_modes(box_radius, modes, real_tagged)


def _prefactor(geometry: Geometry) -> float:
    return 2.0 * math.pi * geometry.hbar / geometry.gamma


def _denominator_grid(params: DenominatorParams, box_radius: int) -> np.ndarray:
    """Exact-path denominators x*a**2 + y*b**2 + c over the whole box.

    Matches :func:`torusres.resonance.denominator_value` bit for bit: the
    integer part is exact and the 128-bit fraction is rounded once.
    """
    m = box_radius
    span = m * m * (abs(params.x_int) + abs(params.y_int) + 2) + m
    if span >= 1 << 62:
        raise OverflowError("box and integer parts exceed the 64-bit budget")
    c_range = np.arange(-m, m + 1, dtype=np.int64)
    grid = np.empty((2 * m + 1, 2 * m + 1, 2 * m + 1), dtype=np.float64)
    for ia in range(2 * m + 1):
        a2 = (ia - m) ** 2
        for ib in range(2 * m + 1):
            base, frac = _mode_frac_raw(params, a2, (ib - m) ** 2)
            grid[ia, ib, :] = (base + c_range).astype(np.float64) + frac / MODULUS
    return grid


def apply_operator(u: FourierField, geometry: Geometry) -> FourierField:
    """Fourier-space action of the forced Schrodinger operator.

    Mode (a, b, c) of the output is -(2*pi*hbar/gamma) * (x*a**2 + y*b**2 + c)
    times the input mode; the sign convention is fixed by the round-trip
    identity with :func:`solve_schrodinger`.  The zero mode is annihilated
    exactly, since its denominator is exactly 0.
    """
    d = _denominator_grid(geometry.reduce(), u.box_radius)
    coeff = (-_prefactor(geometry) * d) * u.coefficients
    return FourierField(u.box_radius, coeff, real_tagged=False)


def solve_schrodinger(
    f: FourierField, geometry: Geometry, min_denominator: float | None = None
) -> FourierField:
    """Invert the forced Schrodinger operator on a zero-mean forcing.

    Each box mode gets u = -(gamma/(2*pi*hbar)) * f / (x*a**2 + y*b**2 + c);
    the zero mode of the solution is 0.  ``min_denominator`` defaults to
    ``1e-14 * max(1, |x| + |y|)``; a required mode (nonzero forcing) whose
    denominator is exactly zero or smaller than this bound in magnitude
    raises :class:`ResonanceError`, distinguishing true resonance from a
    merely large coefficient.
    """
    params = geometry.reduce()
    if f.get(0, 0, 0) != 0:
        raise SolvabilityError(
            f"forcing must have zero mean for a periodic solution; "
            f"zero mode is {f.get(0, 0, 0)!r}"
        )
    if min_denominator is None:
        min_denominator = 1e-14 * max(1.0, abs(params.x_float) + abs(params.y_float))
    elif min_denominator < 0:
        raise ValueError(f"min_denominator must be nonnegative: {min_denominator}")
    d = _denominator_grid(params, f.box_radius)
    required = f.coefficients != 0
    bad = required & ((np.abs(d) < min_denominator) | (d == 0.0))
    if np.any(bad):
        m = f.box_radius
        ia, ib, ic = np.argwhere(bad)[0]
        mode = ModeIndex(int(ia) - m, int(ib) - m, int(ic) - m)
        raise ResonanceError(
            f"denominator {d[ia, ib, ic]:.3e} at mode {tuple(mode)} is below "
            f"the resonance cutoff {min_denominator:.3e}",
            mode,
        )
    out = np.zeros_like(f.coefficients)
    np.divide(f.coefficients, d, out=out, where=required)
    out *= -1.0 / _prefactor(geometry)
    return FourierField(f.box_radius, out, real_tagged=False)


def convolve(u: FourierField, V: FourierField) -> FourierField:
    """Exact truncated convolution; the output box grows to the sum of radii.

    Every product of in-box modes lands inside the output box, so there is
    no aliasing.  The operands are put in a canonical order first (box
    radius, then raw coefficient bytes), which makes commutativity exact:
    the elementwise spectral product is not bit-symmetric under operand
    swap on SIMD hardware.  When both inputs carry the real tag the output
    is symmetrized (the average with its conjugate flip), which restores
    the exact conjugate symmetry the FFT rounding would otherwise break.
    """
    first, second = u, V
    if (second.box_radius, second.coefficients.tobytes()) < (
        first.box_radius,
        first.coefficients.tobytes(),
    ):
        first, second = second, first
    coeff = fftconvolve(first.coefficients, second.coefficients, mode="full")
    both_real = u.real_tagged and V.real_tagged
    if both_real:
        coeff = 0.5 * (coeff + np.conj(coeff[::-1, ::-1, ::-1]))
    return FourierField(u.box_radius + V.box_radius, coeff, real_tagged=both_real)


@dataclass(frozen=True)
class DecayReport:
    """Polynomial-decay diagnostic sup |coeff| * max(|a|,|b|,|c|,1)**degree."""

    degree: int
    sup_norm: float
    zero_mode: complex

    def to_json_dict(self) -> dict:
        return {
            "degree": self.degree,
            "sup_norm": self.sup_norm,
            "zero_mode": [self.zero_mode.real, self.zero_mode.imag],
        }


def decay_report(f: FourierField, degree: int) -> DecayReport:
    """Weighted sup norm measuring polynomial decay, plus the zero mode."""
    if degree < 1:
        raise ValueError(f"degree must be a positive integer: {degree}")
    m = f.box_radius
    idx = np.abs(np.arange(-m, m + 1))
    order = np.maximum(np.maximum(idx[:, None, None], idx[None, :, None]), idx[None, None, :])
    weight = np.maximum(order, 1).astype(np.float64) ** degree
    sup = float(np.max(np.abs(f.coefficients) * weight))
    return DecayReport(degree=degree, sup_norm=sup, zero_mode=f.get(0, 0, 0))


def sample_field(
    f: FourierField, geometry: Geometry, nx: int, ny: int, nt: int
) -> np.ndarray:
    """Evaluate the truncated Fourier series on a uniform spacetime grid.

    Grid point (j, l, s) is (j*alpha/nx, l*beta/ny, s*gamma/nt); the phases
    there are exp(2*pi*i*(a*j/nx + b*l/ny + c*s/nt)), so the sampled values
    do not depend on the geometry scales.  Grid sizes must be at least
    2*box_radius + 1 so distinct box modes stay distinguishable (alias-free
    projection back onto coefficients).
    """
    m = f.box_radius
    side = 2 * m + 1
    for name, n in (("nx", nx), ("ny", ny), ("nt", nt)):
        if n < side:
            raise ValueError(f"{name} = {n} is below the alias-free minimum {side}")
    freqs = np.arange(-m, m + 1)

    def phases(n: int) -> np.ndarray:
        return np.exp(2j * np.pi * np.outer(np.arange(n), freqs) / n)

    return np.einsum(
        "xa,yb,tc,abc->xyt",
        phases(nx),
        phases(ny),
        phases(nt),
        f.coefficients,
        optimize=True,
    )

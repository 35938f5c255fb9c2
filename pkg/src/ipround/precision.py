"""Scalar arithmetic with a configurable significand width.

Every elementary operation in the solver pipeline (problem evaluation,
system assembly, factorizations, triangular solves, iterate updates) is
funneled through a :class:`FloatOps` instance so that a run can be repeated
at reduced working precision.  Emulation rounds each correctly-rounded
double result to ``p`` significand bits, round-to-nearest with ties to
even, giving a unit roundoff of ``u = 2**-p``.  At ``p = 53`` the rounding
is the identity, so emulated and native runs agree bit for bit.

Accepted hazard: rounding an already-rounded double to ``p`` bits is a
double rounding and can occasionally differ from true ``p``-bit hardware
arithmetic.  For the widths used here (``p <= 24`` when emulating) the
discrepancy is far below every tolerance in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MIN_MANTISSA_BITS = 11
MAX_MANTISSA_BITS = 53


class NonFiniteError(ArithmeticError):
    """An elementary operation produced an infinity or a NaN.

    Raised instead of silently propagating the non-finite value so a solve
    aborts with a usable diagnostic.
    """


@dataclass(frozen=True)
class PrecisionConfig:
    """Working-precision description: ``mantissa_bits`` significand bits.

    ``mode == "native"`` means plain platform IEEE doubles; ``"emulated"``
    rounds every elementary result to ``mantissa_bits`` bits.
    """

    mantissa_bits: int = 53
    mode: str = "native"

    def __post_init__(self) -> None:
        if self.mode not in ("native", "emulated"):
            raise ValueError(f"unknown precision mode {self.mode!r}")
        if not MIN_MANTISSA_BITS <= self.mantissa_bits <= MAX_MANTISSA_BITS:
            raise ValueError(
                f"mantissa_bits must lie in [{MIN_MANTISSA_BITS}, "
                f"{MAX_MANTISSA_BITS}], got {self.mantissa_bits}"
            )
        if self.mode == "native" and self.mantissa_bits != MAX_MANTISSA_BITS:
            raise ValueError("native mode implies 53 significand bits")

    @property
    def unit_roundoff(self) -> float:
        return 2.0 ** (-self.mantissa_bits)

    @classmethod
    def native(cls) -> "PrecisionConfig":
        return cls()

    @classmethod
    def emulated(cls, bits: int) -> "PrecisionConfig":
        return cls(mantissa_bits=bits, mode="emulated")

    @classmethod
    def from_bits(cls, bits: int) -> "PrecisionConfig":
        """Native for 53 bits, emulated otherwise."""
        return cls.native() if bits == MAX_MANTISSA_BITS else cls.emulated(bits)


NATIVE = PrecisionConfig()


def round_to_bits(x: float, bits: int) -> float:
    """Round ``x`` to ``bits`` significand bits, nearest-even.

    Exact for any double when ``bits == 53``.  Zeros, infinities and NaNs
    pass through unchanged; the exponent range is not restricted.
    """
    if x == 0.0 or not math.isfinite(x):
        return x
    m, e = math.frexp(x)
    # |m| in [0.5, 1), so m * 2**bits is exact and round() resolves ties
    # to even on the integer grid.
    return math.ldexp(float(round(m * math.ldexp(1.0, bits))), e - bits)


_BINARY = {
    "+": lambda x, y: x + y,
    "-": lambda x, y: x - y,
    "*": lambda x, y: x * y,
    "/": lambda x, y: x / y,
}


def rounded(op: str, x: float, y: float, cfg: PrecisionConfig) -> float:
    """Apply one elementary operation under ``cfg``.

    ``op`` is one of ``+ - * /``.  The double result is re-rounded to the
    configured width in emulated mode.  A non-finite result aborts with
    :class:`NonFiniteError`.
    """
    try:
        r = _BINARY[op](float(x), float(y))
    except KeyError:
        raise ValueError(f"unknown operation {op!r}") from None
    except ZeroDivisionError:
        raise NonFiniteError(f"{x!r} {op} {y!r} divides by zero") from None
    if cfg.mode == "emulated":
        r = round_to_bits(r, cfg.mantissa_bits)
    if not math.isfinite(r):
        raise NonFiniteError(f"{x!r} {op} {y!r} produced {r!r}")
    return r


class FloatOps:
    """Bound elementary operations for one :class:`PrecisionConfig`.

    The composite helpers (``dot``, ``matvec``) accumulate strictly left to
    right so reduced-precision runs are reproducible.
    """

    __slots__ = ("cfg", "_emulated", "_bits")

    def __init__(self, cfg: PrecisionConfig = NATIVE):
        self.cfg = cfg
        self._emulated = cfg.mode == "emulated"
        self._bits = cfg.mantissa_bits

    def c(self, v: float) -> float:
        """Ingest a constant into the working precision."""
        v = float(v)
        return round_to_bits(v, self._bits) if self._emulated else v

    def _finish(self, r: float, what: str) -> float:
        if self._emulated:
            r = round_to_bits(r, self._bits)
        if not math.isfinite(r):
            raise NonFiniteError(f"{what} produced {r!r}")
        return r

    def add(self, x: float, y: float) -> float:
        return self._finish(x + y, "addition")

    def sub(self, x: float, y: float) -> float:
        return self._finish(x - y, "subtraction")

    def mul(self, x: float, y: float) -> float:
        return self._finish(x * y, "multiplication")

    def div(self, x: float, y: float) -> float:
        if y == 0.0:
            raise NonFiniteError(f"division of {x!r} by zero")
        return self._finish(x / y, "division")

    def sqrt(self, x: float) -> float:
        if x < 0.0:
            raise NonFiniteError(f"square root of negative value {x!r}")
        return self._finish(math.sqrt(x), "square root")

    def dot(self, x, y) -> float:
        acc = 0.0
        for a, b in zip(x, y):
            acc = self.add(acc, self.mul(float(a), float(b)))
        return acc

    def matvec(self, a: np.ndarray, x) -> np.ndarray:
        out = np.empty(a.shape[0])
        for i in range(a.shape[0]):
            out[i] = self.dot(a[i], x)
        return out


NATIVE_OPS = FloatOps(NATIVE)

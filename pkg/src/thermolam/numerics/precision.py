"""Working-precision control for the ball-arithmetic backend.

All extended-precision arithmetic in the package runs on python-flint
``acb``/``acb_mat`` values with the error radii discarded (midpoint
arithmetic).  The exponent range is unbounded, so precision only limits
the mantissa; very large and very small entries of a transfer matrix can
coexist without overflow.

The backend keeps its precision in a process-global context.  Every
routine that computes sets it through :func:`working_precision`, so two
threads must not compute concurrently in one process.  Sweeps parallelise
over processes instead.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Iterator

from flint import ctx

#: Mantissa bits of the named precision levels.
LEVELS: dict[str, int] = {"double": 53, "dd": 106, "qd": 212}

#: Guard bits added on top of the dynamic-range estimate in adaptive mode.
GUARD_BITS = 64


def level_bits(level: str | int) -> int:
    """Return the mantissa width of a named level, or pass an int through."""
    if isinstance(level, int):
        if level < 2:
            raise ValueError(f"precision must be at least 2 bits, got {level}")
        return level
    try:
        return LEVELS[level]
    except KeyError:
        raise ValueError(
            f"unknown precision level {level!r}; expected one of {sorted(LEVELS)}"
        ) from None


@contextmanager
def working_precision(bits: int) -> Iterator[int]:
    """Temporarily set the backend precision to ``bits`` mantissa bits."""
    old = ctx.prec
    ctx.prec = int(bits)
    try:
        yield int(bits)
    finally:
        ctx.prec = old


def unit_roundoff(bits: int) -> float:
    """Unit roundoff ``2**-bits`` as a float (0.0 once it underflows)."""
    return math.ldexp(1.0, -int(bits))


@dataclass(frozen=True)
class PrecisionPolicy:
    """How many mantissa bits a computation should carry.

    Parameters
    ----------
    level : str
        Base level, one of ``double``, ``dd`` or ``qd``.
    adaptive : bool
        When true, callers add ``guard * X / ln 2`` bits, where ``X`` is
        the natural-log dynamic range of the matrices involved (see
        :meth:`bits_for_range`).  A fixed policy always uses the base
        level, which reproduces plain fixed-width arithmetic.
    guard : float
        Multiplier on the dynamic range.  2 keeps the smallest
        eigenvalues of a matrix with entries up to ``e**X`` accurate to
        the base precision.
    """

    level: str = "dd"
    adaptive: bool = True
    guard: float = 2.0

    def __post_init__(self) -> None:
        level_bits(self.level)
        if self.guard < 0:
            raise ValueError("guard must be non-negative")

    @property
    def base_bits(self) -> int:
        return LEVELS[self.level]

    def bits_for_range(self, log_range: float, factor: float | None = None) -> int:
        """Bits needed for values spanning ``exp(+-log_range)``.

        ``factor`` overrides :attr:`guard` for steps that are more
        sensitive than plain products, e.g. characteristic polynomials.
        """
        if not self.adaptive:
            return self.base_bits
        g = self.guard if factor is None else factor
        extra = max(0.0, float(log_range)) * g / math.log(2.0)
        return self.base_bits + GUARD_BITS + int(math.ceil(extra))

    @classmethod
    def coerce(cls, value: "PrecisionPolicy | str | None") -> "PrecisionPolicy":
        """Accept a policy, a level name (fixed) or ``None`` (adaptive dd)."""
        if value is None:
            return cls()
        if isinstance(value, PrecisionPolicy):
            return value
        if isinstance(value, str):
            if value == "auto":
                return cls()
            return cls(level=value, adaptive=False)
        raise TypeError(f"cannot interpret {value!r} as a precision policy")

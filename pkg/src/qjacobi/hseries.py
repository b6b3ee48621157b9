"""Truncated formal power series in the deformation parameter h.

A series of order N trusts the coefficients of h^0 .. h^(N-1) and knows
nothing beyond; every arithmetic operation returns the weakest order of
its inputs so precision is never silently inflated.  Coefficients may be
any exact ring elements implementing the small protocol used here:
``+``, unary ``-``, ``*`` (ring product), ``scale(Scalar)``,
``ring_one()``, ``ring_zero()``, ``is_zero``, ``==`` and ``to_text()``.
Noncommutative polynomials, exact sparse matrices and the transport
normal forms all qualify.
"""

from __future__ import annotations

from typing import Sequence

from .ncalg import Alphabet, Scalar, ScalarLike, parse_poly

__all__ = ["HSeries", "SeriesError", "parse_series", "series_arith"]


class SeriesError(ValueError):
    """Incompatible operands or an operation that would fabricate
    unknown coefficients."""


class HSeries:
    """A power series known modulo h^order, with exact coefficients."""

    __slots__ = ("order", "coeffs")

    def __init__(self, coeffs: Sequence):
        coeffs = tuple(coeffs)
        if not coeffs:
            raise SeriesError("a series needs at least the h^0 coefficient")
        self.coeffs = coeffs
        self.order = len(coeffs)

    @classmethod
    def constant(cls, value, order: int) -> "HSeries":
        if order < 1:
            raise SeriesError("order must be positive")
        zero = value.ring_zero()
        return cls((value,) + (zero,) * (order - 1))

    @classmethod
    def unit(cls, exemplar, order: int) -> "HSeries":
        """The multiplicative identity, built from any coefficient of the
        intended ring."""
        return cls.constant(exemplar.ring_one(), order)

    def coeff(self, k: int):
        if not 0 <= k < self.order:
            raise SeriesError(f"coefficient h^{k} is outside the known order {self.order}")
        return self.coeffs[k]

    @property
    def is_zero(self) -> bool:
        return all(c.is_zero for c in self.coeffs)

    def _binary(self, other, op):
        if not isinstance(other, HSeries):
            raise SeriesError("operand is not a series")
        n = min(self.order, other.order)
        try:
            return HSeries([op(self.coeffs[k], other.coeffs[k]) for k in range(n)])
        except (TypeError, ValueError) as exc:
            raise SeriesError(f"incompatible series coefficients: {exc}") from exc

    def __add__(self, other):
        return self._binary(other, lambda a, b: a + b)

    def __sub__(self, other):
        return self._binary(other, lambda a, b: a - b)

    def __neg__(self):
        return HSeries([-c for c in self.coeffs])

    def __mul__(self, other):
        if not isinstance(other, HSeries):
            raise SeriesError("operand is not a series")
        n = min(self.order, other.order)
        out = []
        try:
            for k in range(n):
                acc = None
                for i in range(k + 1):
                    term = self.coeffs[i] * other.coeffs[k - i]
                    acc = term if acc is None else acc + term
                out.append(acc)
        except (TypeError, ValueError) as exc:
            raise SeriesError(f"incompatible series coefficients: {exc}") from exc
        return HSeries(out)

    def scale(self, factor: ScalarLike) -> "HSeries":
        factor = Scalar.coerce(factor)
        return HSeries([c.scale(factor) for c in self.coeffs])

    def truncate(self, n: int) -> "HSeries":
        if n < 1:
            raise SeriesError("truncation order must be positive")
        if n > self.order:
            raise SeriesError(f"cannot extend knowledge from h^{self.order} to h^{n}")
        return HSeries(self.coeffs[:n])

    def shift(self, k: int) -> "HSeries":
        """Multiply by h^k; the result is known to order + k."""
        if k < 0:
            raise SeriesError("shift exponent must be nonnegative")
        zero = self.coeffs[0].ring_zero()
        return HSeries((zero,) * k + self.coeffs)

    def invert(self) -> "HSeries":
        """Two-sided inverse in the truncated ring; the constant term must
        be the multiplicative identity."""
        one = self.coeffs[0].ring_one()
        if self.coeffs[0] != one:
            raise SeriesError("series is not invertible: constant term is not the identity")
        inv = [one]
        for k in range(1, self.order):
            acc = None
            for j in range(1, k + 1):
                term = self.coeffs[j] * inv[k - j]
                acc = term if acc is None else acc + term
            inv.append(-acc)
        return HSeries(inv)

    def exp(self) -> "HSeries":
        """Exponential of a series with zero constant term."""
        if not self.coeffs[0].is_zero:
            raise SeriesError("exp needs a zero constant term")
        result = HSeries.unit(self.coeffs[0], self.order)
        power = result
        for m in range(1, self.order):
            power = (power * self).scale(Scalar.rational(1, m))
            result = result + power
        return result

    def __eq__(self, other):
        """Equality modulo h^min(orders), exact coefficient-wise."""
        if not isinstance(other, HSeries):
            return NotImplemented
        n = min(self.order, other.order)
        try:
            return all(self.coeffs[k] == other.coeffs[k] for k in range(n))
        except (TypeError, ValueError):
            return False

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        return f"HSeries(order={self.order})"

    def to_text(self) -> str:
        return "\n".join(f"h^{k}: {c.to_text()}" for k, c in enumerate(self.coeffs))

    def to_json(self) -> dict:
        return {"order": self.order, "coeffs": [c.to_text() for c in self.coeffs]}


def parse_series(text: str, alphabet: Alphabet, constants: tuple[str, ...] = ("ipi",)) -> HSeries:
    """Parse the canonical text form with polynomial coefficients."""
    coeffs = []
    for k, line in enumerate(text.strip().splitlines()):
        head, _, body = line.partition(":")
        if head.strip() != f"h^{k}":
            raise SeriesError(f"expected the h^{k} line, got {line!r}")
        coeffs.append(parse_poly(body.strip(), alphabet, constants))
    if not coeffs:
        raise SeriesError("no coefficient lines")
    return HSeries(coeffs)


def series_arith(a: HSeries, b: HSeries, op: str) -> HSeries:
    """Dispatch series arithmetic by operation name."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown series operation {op!r}")

"""Inductive computation of the associator correction series.

The series and its inverse live over the two-letter alphabet O12, O23.
Both start at 1 with no linear term.  One forward pass n = 3..N carries
the pair along: at step n every degree-k table entry is conjugated
through the pair truncated two orders back, and the results are summed
into the new pair truncated to h^n.  Reading the pair only two orders
back is what makes the single pass exact, so no fixed-point iteration is
needed.

The inverse is assembled from the same blocks with the opposite sign
convention and is cross-checked against ring inversion by
:func:`check_inverse_consistency`, which turns the inverse formula into
a machine-checked property.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .deformation import EkTable, TableError, make_Fk, make_Gk, validate_table
from .hseries import HSeries
from .ncalg import Alphabet, NCPoly

__all__ = ["EngineError", "InverseReport", "PSI_ALPHABET", "PsiPair", "check_inverse_consistency", "compute_psi"]

logger = logging.getLogger(__name__)

PSI_ALPHABET = Alphabet(("O12", "O23"))


class EngineError(RuntimeError):
    """The computed pair violates an invariant it must satisfy."""


@dataclass
class PsiPair:
    """The series, its inverse, the truncation order and the table used."""

    psi: HSeries
    psi_inv: HSeries
    order: int
    table_id: str

    def validate(self) -> None:
        one = NCPoly.one(PSI_ALPHABET)
        zero = NCPoly.zero(PSI_ALPHABET)
        for name, series in (("psi", self.psi), ("psi_inv", self.psi_inv)):
            if series.order != self.order:
                raise EngineError(f"{name} has order {series.order}, expected {self.order}")
            if series.coeffs[0] != one:
                raise EngineError(f"{name} does not start at 1")
            if self.order >= 2 and series.coeffs[1] != zero:
                raise EngineError(f"{name} has a nonzero linear coefficient")
        unit = HSeries.unit(one, self.order)
        if self.psi * self.psi_inv != unit or self.psi_inv * self.psi != unit:
            raise EngineError("pair is not mutually inverse at the stated order")


def compute_psi(table: EkTable, order: int) -> PsiPair:
    """Compute the pair modulo h^order from a coefficient table.

    Table degrees absent from 2..order-1 contribute nothing; they are
    treated as zero coefficients and logged.
    """
    if order < 2:
        raise ValueError(f"order must be at least 2, got {order}")
    diagnostics = validate_table(table)
    if not diagnostics.ok:
        raise TableError("; ".join(diagnostics.problems))

    degrees = table.degrees()
    missing = [k for k in range(2, order) if k not in degrees]
    if missing:
        logger.info(
            "table %s has no entries for degrees %s; treating them as zero",
            table.source,
            missing,
        )

    one = NCPoly.one(PSI_ALPHABET)
    o12 = NCPoly.letter(PSI_ALPHABET, "O12")
    o23 = NCPoly.letter(PSI_ALPHABET, "O23")

    psi = HSeries.unit(one, 2)
    psi_inv = HSeries.unit(one, 2)
    for n in range(3, order + 1):
        back = psi.truncate(n - 2)
        back_inv = psi_inv.truncate(n - 2)
        acc = HSeries.unit(one, n)
        acc_inv = HSeries.unit(one, n)
        for k in degrees:
            if k > n - 1:
                break
            gk = make_Gk(table, k, back, back_inv, o12, o23)
            fk = make_Fk(back, gk)
            acc = acc + fk.shift(k).truncate(n)
            acc_inv = acc_inv + gk.shift(k).truncate(n)
        psi, psi_inv = acc, acc_inv

    pair = PsiPair(psi, psi_inv, order, table.source)
    pair.validate()
    return pair


@dataclass
class InverseReport:
    """Outcome of checking the inverse formula against ring inversion."""

    ok: bool
    mismatched_degrees: list[int]

    def __bool__(self) -> bool:
        return self.ok


def check_inverse_consistency(pair: PsiPair) -> InverseReport:
    """Compare the assembled inverse with the ring inverse of the series,
    coefficient by coefficient."""
    ring_inverse = pair.psi.invert()
    mismatched = [
        k
        for k in range(min(pair.psi_inv.order, ring_inverse.order))
        if pair.psi_inv.coeffs[k] != ring_inverse.coeffs[k]
    ]
    return InverseReport(not mismatched, mismatched)

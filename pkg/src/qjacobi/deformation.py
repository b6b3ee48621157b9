"""Associator coefficient tables and the run-substitution map.

The degree-k coefficients of the associator series are homogeneous
noncommutative polynomials in two letters A, B.  The map :func:`alpha`
rewrites each monomial A^n1 B^m1 ... A^nj B^mj into the conjugated word
C^n1 Zinv D^m1 Z ... C^nj Zinv D^mj Z over four letters with Z, Zinv a
mutually inverse pair; boundary runs may be empty, which is what makes
the map total on all words.  Substituting a series and its inverse for
Z, Zinv yields the degree-k building blocks consumed by the inductive
engine.

Only the degree-2 coefficient, (1/24)(AB - BA), ships built in.  Higher
degrees are supplied as data files because their closed forms depend on
normalization choices this package does not make; validation only
enforces homogeneity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

from .hseries import HSeries, SeriesError
from .ncalg import Alphabet, NCPoly, Scalar, parse_poly, substitute

__all__ = [
    "AB_ALPHABET",
    "CDZ_ALPHABET",
    "EkTable",
    "TableError",
    "alpha",
    "builtin_table",
    "dump_table",
    "load_table",
    "make_Fk",
    "make_Gk",
    "parse_table",
    "validate_table",
]

AB_ALPHABET = Alphabet(("A", "B"))
CDZ_ALPHABET = Alphabet(("C", "D", "Z", "Zinv"), (("Z", "Zinv"),))


class TableError(ValueError):
    """Unreadable or invalid coefficient table."""


def _alpha_word(word: tuple[str, ...]) -> tuple[str, ...]:
    groups: list[tuple[str, int]] = []
    for letter in word:
        if groups and groups[-1][0] == letter:
            groups[-1] = (letter, groups[-1][1] + 1)
        else:
            groups.append((letter, 1))
    out: list[str] = []
    i = 0
    while i < len(groups):
        n = m = 0
        if groups[i][0] == "A":
            n = groups[i][1]
            i += 1
        if i < len(groups) and groups[i][0] == "B":
            m = groups[i][1]
            i += 1
        out.extend(["C"] * n + ["Zinv"] + ["D"] * m + ["Z"])
    return tuple(out)


def alpha(p: NCPoly) -> NCPoly:
    """Apply the run substitution to a polynomial over {A, B}."""
    if p.alphabet != AB_ALPHABET:
        raise TableError("alpha expects a polynomial over the letters A, B")
    terms = [(_alpha_word(word), coeff) for word, coeff in p.sorted_terms()]
    return NCPoly(CDZ_ALPHABET, terms)


@dataclass
class EkTable:
    """Degree -> homogeneous polynomial over {A, B}, with provenance notes."""

    entries: dict[int, NCPoly] = field(default_factory=dict)
    provenance: dict[int, str] = field(default_factory=dict)
    constants: tuple[str, ...] = ("ipi",)
    source: str = "custom"

    def degrees(self) -> list[int]:
        return sorted(k for k, p in self.entries.items() if not p.is_zero)

    def entry(self, k: int) -> NCPoly:
        try:
            return self.entries[k]
        except KeyError:
            raise TableError(f"table {self.source!r} has no degree-{k} entry") from None


def builtin_table() -> EkTable:
    """The built-in table: only degree 2, equal to (1/24)(AB - BA)."""
    ab = NCPoly.word(AB_ALPHABET, ("A", "B"), Scalar.rational(1, 24))
    ba = NCPoly.word(AB_ALPHABET, ("B", "A"), Scalar.rational(1, 24))
    return EkTable(
        entries={2: ab - ba},
        provenance={2: "closed form of the degree-2 associator coefficient"},
        source="builtin",
    )


@dataclass
class TableDiagnostics:
    source: str
    degrees: list[int]
    missing_below_max: list[int]
    problems: list[str]

    @property
    def ok(self) -> bool:
        return not self.problems

    def __bool__(self) -> bool:
        return self.ok


def validate_table(table: EkTable) -> TableDiagnostics:
    """Check homogeneity degree by degree and report coverage."""
    problems = []
    for k, poly in sorted(table.entries.items()):
        if k < 2:
            problems.append(f"degree {k} below the minimum degree 2")
        if poly.alphabet != AB_ALPHABET:
            problems.append(f"degree {k} entry is not over the letters A, B")
            continue
        if not poly.is_homogeneous(k):
            problems.append(
                f"degree {k} entry is not homogeneous of word length {k}: {poly.to_text()}"
            )
    degrees = table.degrees()
    missing = [k for k in range(2, max(degrees) + 1)] if degrees else []
    missing = [k for k in missing if k not in degrees]
    return TableDiagnostics(table.source, degrees, missing, problems)


def parse_table(text: str, source: str = "custom") -> EkTable:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TableError(f"cannot parse table: {exc}") from exc
    if not isinstance(doc, dict) or "entries" not in doc:
        raise TableError("table document needs an 'entries' object")
    constants = tuple(doc.get("constants", ())) + ("ipi",)
    entries: dict[int, NCPoly] = {}
    provenance: dict[int, str] = {}
    for key, value in doc["entries"].items():
        try:
            degree = int(key)
        except ValueError as exc:
            raise TableError(f"bad degree key {key!r}") from exc
        if not isinstance(value, str):
            raise TableError(f"degree {degree}: entry must be canonical polynomial text")
        try:
            entries[degree] = parse_poly(value, AB_ALPHABET, constants)
        except ValueError as exc:
            raise TableError(f"degree {degree}: {exc}") from exc
        provenance[degree] = str(doc.get("provenance", {}).get(key, f"{source} entry"))
    table = EkTable(entries, provenance, constants, source)
    diagnostics = validate_table(table)
    if not diagnostics.ok:
        raise TableError("; ".join(diagnostics.problems))
    return table


def load_table(path_or_name: str) -> EkTable:
    """Load a table from a JSON file, or the built-in one by name."""
    if path_or_name == "builtin":
        return builtin_table()
    try:
        with open(path_or_name, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise TableError(f"cannot read table file: {exc}") from exc
    return parse_table(text, source=str(path_or_name))


def dump_table(table: EkTable) -> str:
    """Canonical JSON serialization; byte-stable for golden files."""
    doc = {
        "constants": [c for c in table.constants if c != "ipi"],
        "entries": {str(k): table.entries[k].to_text() for k in sorted(table.entries)},
        "provenance": {str(k): table.provenance.get(k, "") for k in sorted(table.entries)},
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def builtin_table_text() -> str:
    """The shipped copy of the built-in table, byte-identical to
    ``dump_table(builtin_table())``."""
    return resources.files("qjacobi.data").joinpath("builtin_table.json").read_text("utf-8")


def make_Gk(
    table: EkTable,
    k: int,
    Z_image: HSeries,
    Zinv_image: HSeries,
    C_image: NCPoly,
    D_image: NCPoly,
) -> HSeries:
    """Substitute the conjugator pair and Casimir letters into alpha(E_k)."""
    entry = table.entry(k)
    order = min(Z_image.order, Zinv_image.order)
    unit = HSeries.unit(Z_image.coeffs[0], order)
    if Z_image * Zinv_image != unit or Zinv_image * Z_image != unit:
        raise SeriesError("Z and Zinv images are not mutually inverse at the working order")
    images = {"Z": Z_image, "Zinv": Zinv_image, "C": C_image, "D": D_image}
    return substitute(alpha(entry), images)


def make_Fk(psi_approx: HSeries, Gk: HSeries) -> HSeries:
    """The companion coefficient: minus the series times the block."""
    return -(psi_approx * Gk)

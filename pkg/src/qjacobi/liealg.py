"""Exact matrix models of semisimple Lie algebras and their tensor operators.

A Lie algebra is given by rational structure constants; every derived
object (adjoint matrices, the Killing form, the dual Casimir tensor, the
bracket map on the double tensor space, the flip and the two-site
Casimir operator) is assembled as an exact sparse matrix.  The classical
antisymmetry, Jacobi and braid identities, and the braiding relation of
the exponential with a formal ipi constant, are then literal matrix
equalities.

Tensor index convention: basis vector i (x) j of the double space sits
at position i*d + j (row-major), and likewise for triple spaces.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

from .hseries import HSeries
from .matrices import SparseMatrix, kron, minimal_polynomial
from .ncalg import NCPoly, Scalar
from .psiengine import PSI_ALPHABET

__all__ = [
    "AlgebraError",
    "LieAlgebraData",
    "TensorOps",
    "algebra_from_data",
    "algebra_to_json",
    "build_algebra",
    "build_tensor_ops",
    "eval_series",
    "spectral_report",
    "structure_report",
    "verify_classical",
    "verify_sigma_rmatrix",
]


class AlgebraError(ValueError):
    """Structure constants that fail antisymmetry, Jacobi, or the
    semisimplicity (Killing nondegeneracy) check."""


@dataclass
class LieAlgebraData:
    """Basis labels and sparse structure constants [x_i, x_j] = sum c_ijk x_k."""

    dim: int
    basis_names: tuple[str, ...]
    structure: dict[tuple[int, int], dict[int, Fraction]]
    name: str = "custom"

    def bracket(self, i: int, j: int) -> dict[int, Fraction]:
        return self.structure.get((i, j), {})

    def ad(self, i: int) -> SparseMatrix:
        """Matrix of ad x_i acting on the algebra itself."""
        entries = []
        for j in range(self.dim):
            for k, c in self.bracket(i, j).items():
                entries.append((k, j, c))
        return SparseMatrix(self.dim, self.dim, entries)

    def killing(self) -> SparseMatrix:
        ads = [self.ad(i) for i in range(self.dim)]
        entries = []
        for i in range(self.dim):
            for j in range(i, self.dim):
                value = (ads[i] * ads[j]).trace()
                entries.append((i, j, value))
                if i != j:
                    entries.append((j, i, value))
        return SparseMatrix(self.dim, self.dim, entries)


def _validate_algebra(alg: LieAlgebraData) -> None:
    d = alg.dim
    for (i, j), row in alg.structure.items():
        if not (0 <= i < d and 0 <= j < d):
            raise AlgebraError(f"bracket ({i}, {j}) outside the basis range")
        for k in row:
            if not 0 <= k < d:
                raise AlgebraError(f"bracket ({i}, {j}) targets unknown basis index {k}")
    for i in range(d):
        for j in range(d):
            left = alg.bracket(i, j)
            right = alg.bracket(j, i)
            keys = set(left) | set(right)
            for k in keys:
                if left.get(k, Fraction(0)) != -right.get(k, Fraction(0)):
                    raise AlgebraError(
                        f"antisymmetry fails at [{alg.basis_names[i]}, {alg.basis_names[j]}]"
                    )
    for i in range(d):
        for j in range(d):
            for k in range(d):
                acc: dict[int, Fraction] = {}
                for (a, b, c) in ((i, j, k), (j, k, i), (k, i, j)):
                    for m, cab in alg.bracket(a, b).items():
                        for l, cmk in alg.bracket(m, c).items():
                            acc[l] = acc.get(l, Fraction(0)) + cab * cmk
                if any(acc.values()):
                    raise AlgebraError(
                        "Jacobi identity fails at "
                        f"({alg.basis_names[i]}, {alg.basis_names[j]}, {alg.basis_names[k]})"
                    )
    if alg.killing().rank() != d:
        raise AlgebraError("Killing form is degenerate: the algebra is not semisimple")


def _sl2() -> LieAlgebraData:
    # Basis (e, h, f) with [h, e] = 2e, [h, f] = -2f, [e, f] = h.
    two = Fraction(2)
    structure = {
        (1, 0): {0: two},
        (0, 1): {0: -two},
        (1, 2): {2: -two},
        (2, 1): {2: two},
        (0, 2): {1: Fraction(1)},
        (2, 0): {1: Fraction(-1)},
    }
    return LieAlgebraData(3, ("e", "h", "f"), structure, name="sl2")


def _sl_n(n: int) -> LieAlgebraData:
    """sl(n) from its defining matrices: E_ab off the diagonal, then the
    differences of consecutive diagonal units."""
    pairs = [(a, b) for a in range(n) for b in range(n) if a != b]
    names = tuple(f"E{a + 1}{b + 1}" for a, b in pairs) + tuple(f"h{i + 1}" for i in range(n - 1))

    def unit(a, b):
        return {(a, b): Fraction(1)}

    basis_mats = [unit(a, b) for a, b in pairs]
    for i in range(n - 1):
        basis_mats.append({(i, i): Fraction(1), (i + 1, i + 1): Fraction(-1)})

    def matmul(x, y):
        out: dict[tuple[int, int], Fraction] = {}
        for (a, b), va in x.items():
            for (c, e), vb in y.items():
                if b == c:
                    out[(a, e)] = out.get((a, e), Fraction(0)) + va * vb
        return {k: v for k, v in out.items() if v}

    def decompose(mat) -> dict[int, Fraction]:
        coeffs: dict[int, Fraction] = {}
        for idx, (a, b) in enumerate(pairs):
            v = mat.get((a, b))
            if v:
                coeffs[idx] = v
        partial = Fraction(0)
        for i in range(n - 1):
            partial += mat.get((i, i), Fraction(0))
            if partial:
                coeffs[len(pairs) + i] = partial
        return coeffs

    structure: dict[tuple[int, int], dict[int, Fraction]] = {}
    dim = len(basis_mats)
    for i in range(dim):
        for j in range(dim):
            if i == j:
                continue
            lhs = matmul(basis_mats[i], basis_mats[j])
            rhs = matmul(basis_mats[j], basis_mats[i])
            comm = dict(lhs)
            for key, v in rhs.items():
                nv = comm.get(key, Fraction(0)) - v
                if nv:
                    comm[key] = nv
                else:
                    comm.pop(key, None)
            coeffs = decompose(comm)
            if coeffs:
                structure[(i, j)] = coeffs
    return LieAlgebraData(dim, names, structure, name=f"sl{n}")


_PRESETS = {"sl2": _sl2, "sl3": lambda: _sl_n(3)}


def _frac(value) -> Fraction:
    try:
        if isinstance(value, (str, int)):
            return Fraction(value)
    except (ValueError, ZeroDivisionError) as exc:
        raise AlgebraError(f"bad structure coefficient {value!r}: {exc}") from exc
    raise AlgebraError(f"structure coefficients must be exact, got {type(value).__name__}")


def algebra_from_data(doc: dict, name: str = "custom") -> LieAlgebraData:
    try:
        dim = int(doc["dim"])
        basis = tuple(str(x) for x in doc["basis"])
        brackets = doc["brackets"]
    except (KeyError, TypeError, ValueError) as exc:
        raise AlgebraError(f"malformed algebra document: {exc}") from exc
    if len(basis) != dim:
        raise AlgebraError("basis label count does not match dim")
    structure: dict[tuple[int, int], dict[int, Fraction]] = {}
    for item in brackets:
        try:
            i, j, targets = int(item[0]), int(item[1]), item[2]
            row = {int(k): _frac(v) for k, v in targets}
        except (IndexError, TypeError, ValueError) as exc:
            raise AlgebraError(f"malformed bracket entry {item!r}: {exc}") from exc
        structure[(i, j)] = {k: v for k, v in row.items() if v}
    # Fill unstated mirror brackets by antisymmetry; stated ones are
    # validated as given.
    for (i, j), row in list(structure.items()):
        if (j, i) not in structure:
            structure[(j, i)] = {k: -v for k, v in row.items()}
    alg = LieAlgebraData(dim, basis, structure, name=name)
    _validate_algebra(alg)
    return alg


def algebra_to_json(alg: LieAlgebraData) -> dict:
    """Dump structure constants in the interchange file layout."""
    brackets = []
    for (i, j) in sorted(alg.structure):
        row = alg.structure[(i, j)]
        if row:
            brackets.append([i, j, [[k, str(row[k])] for k in sorted(row)]])
    return {"dim": alg.dim, "basis": list(alg.basis_names), "brackets": brackets}


def build_algebra(spec) -> LieAlgebraData:
    """Build a validated algebra from a preset name, a JSON file path, or
    an already-parsed document."""
    if isinstance(spec, dict):
        return algebra_from_data(spec)
    if spec in _PRESETS:
        alg = _PRESETS[spec]()
        _validate_algebra(alg)
        return alg
    try:
        with open(spec, "r", encoding="utf-8") as handle:
            doc = json.load(handle)
    except OSError as exc:
        raise AlgebraError(f"cannot read algebra file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise AlgebraError(f"cannot parse algebra file: {exc}") from exc
    return algebra_from_data(doc, name=str(spec))


@dataclass
class TensorOps:
    """The derived tensor operators of one algebra, all exact."""

    alg: LieAlgebraData
    ad: tuple[SparseMatrix, ...]
    T: SparseMatrix          # bracket, double space -> algebra
    sigma: SparseMatrix      # flip on the double space
    t_vec: SparseMatrix      # dual Casimir tensor as a column vector
    t_action: SparseMatrix   # Casimir tensor acting through the adjoint
    Omega: SparseMatrix      # -(T (x) T) o (1 (x) t (x) 1)
    sigma12: SparseMatrix
    sigma23: SparseMatrix
    Omega12: SparseMatrix
    Omega23: SparseMatrix


def build_tensor_ops(alg: LieAlgebraData) -> TensorOps:
    d = alg.dim
    ads = tuple(alg.ad(i) for i in range(d))

    t_entries = []
    for i in range(d):
        for j in range(d):
            for k, c in alg.bracket(i, j).items():
                t_entries.append((k, i * d + j, c))
    T = SparseMatrix(d, d * d, t_entries)

    sigma = SparseMatrix(d * d, d * d, [(j * d + i, i * d + j, 1) for i in range(d) for j in range(d)])

    kinv = alg.killing().inverse()
    t_vec = SparseMatrix(d * d, 1, [(i * d + j, 0, kinv.entry(i, j)) for i in range(d) for j in range(d)])

    t_action = SparseMatrix.zeros(d * d, d * d)
    for i in range(d):
        for j in range(d):
            coeff = kinv.entry(i, j)
            if not coeff.is_zero:
                t_action = t_action + kron(ads[i], ads[j]).scale(coeff)

    # 1 (x) t (x) 1 sends v (x) w to sum t_ij v (x) e_i (x) e_j (x) w.
    mid_entries = []
    for i in range(d):
        for j in range(d):
            coeff = kinv.entry(i, j)
            if coeff.is_zero:
                continue
            for v in range(d):
                for w in range(d):
                    row = ((v * d + i) * d + j) * d + w
                    mid_entries.append((row, v * d + w, coeff))
    mid = SparseMatrix(d ** 4, d * d, mid_entries)
    Omega = -(kron(T, T) * mid)

    eye = SparseMatrix.identity(d)
    return TensorOps(
        alg=alg,
        ad=ads,
        T=T,
        sigma=sigma,
        t_vec=t_vec,
        t_action=t_action,
        Omega=Omega,
        sigma12=kron(sigma, eye),
        sigma23=kron(eye, sigma),
        Omega12=kron(Omega, eye),
        Omega23=kron(eye, Omega),
    )


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class Report:
    algebra: str
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def __bool__(self) -> bool:
        return self.ok

    def to_json(self) -> dict:
        return {
            "algebra": self.algebra,
            "passed": self.ok,
            "checks": [
                {"name": c.name, "passed": c.passed, "detail": c.detail} for c in self.checks
            ],
        }


def _matrix_check(name: str, lhs: SparseMatrix, rhs: SparseMatrix) -> CheckResult:
    diff = lhs.first_difference(rhs)
    if diff is None:
        return CheckResult(name, True)
    i, j, a, b = diff
    return CheckResult(name, False, f"first difference at ({i}, {j}): {a.to_text()} vs {b.to_text()}")


def verify_classical(ops: TensorOps) -> Report:
    """Antisymmetry, Jacobi and braid identities as matrix equalities."""
    d = ops.alg.dim
    eye = SparseMatrix.identity(d)
    eye3 = SparseMatrix.identity(d ** 3)
    report = Report(ops.alg.name)
    report.checks.append(_matrix_check("3.1", ops.T * ops.sigma, -ops.T))
    lhs = ops.T * kron(ops.T, eye)
    rhs = ops.T * kron(eye, ops.T) * (eye3 - ops.sigma12)
    report.checks.append(_matrix_check("3.2", lhs, rhs))
    report.checks.append(
        _matrix_check(
            "3.3",
            ops.sigma12 * ops.sigma23 * ops.sigma12,
            ops.sigma23 * ops.sigma12 * ops.sigma23,
        )
    )
    return report


def structure_report(ops: TensorOps) -> Report:
    """The structure-tensor invariants of the derived operators."""
    d = ops.alg.dim
    eye = SparseMatrix.identity(d)
    report = Report(ops.alg.name)
    report.checks.append(_matrix_check("t_symmetric", ops.sigma * ops.t_vec, ops.t_vec))
    zero_vec = SparseMatrix.zeros(d * d, 1)
    for i in range(d):
        diagonal = kron(ops.ad[i], eye) + kron(eye, ops.ad[i])
        report.checks.append(
            _matrix_check(f"t_invariant[{ops.alg.basis_names[i]}]", diagonal * ops.t_vec, zero_vec)
        )
        report.checks.append(
            _matrix_check(
                f"omega_diagonal_commutes[{ops.alg.basis_names[i]}]",
                ops.Omega * diagonal,
                diagonal * ops.Omega,
            )
        )
    report.checks.append(_matrix_check("sigma_omega_sigma", ops.sigma * ops.Omega * ops.sigma, ops.Omega))
    report.checks.append(_matrix_check("sigma_squared", ops.sigma * ops.sigma, SparseMatrix.identity(d * d)))
    return report


def verify_sigma_rmatrix(ops: TensorOps, order: int) -> Report:
    """Flip = braiding composed with the inverse exponential, mod h^order.

    The braiding exponential is built from the Casimir tensor acting
    through the adjoint representation, while the correcting exponential
    uses the operator assembled from the bracket map, so the equality
    also certifies that the two constructions agree.
    """
    if order < 1:
        raise ValueError("order must be positive")
    d2 = ops.alg.dim ** 2
    ipi = Scalar.constant("ipi")
    zero = SparseMatrix.zeros(d2, d2)

    def one_step(matrix: SparseMatrix, coeff: Scalar) -> HSeries:
        coeffs = [zero] * order
        if order > 1:
            coeffs[1] = matrix.scale(coeff)
        return HSeries(coeffs)

    sigma_series = HSeries.constant(ops.sigma, order)
    braiding = sigma_series * one_step(ops.t_action, ipi).exp()
    rhs = braiding * one_step(ops.Omega, -ipi).exp()

    report = Report(ops.alg.name)
    for k in range(order):
        check = _matrix_check(f"h^{k}", sigma_series.coeffs[k], rhs.coeffs[k])
        report.checks.append(check)
    return report


def eval_series(series: HSeries, ops: TensorOps) -> HSeries:
    """Evaluate a series over the letters O12, O23 on the triple tensor
    space of an algebra."""
    d3 = ops.alg.dim ** 3
    letters = {"O12": ops.Omega12, "O23": ops.Omega23}
    eye = SparseMatrix.identity(d3)
    out = []
    for coeff in series.coeffs:
        if not isinstance(coeff, NCPoly) or coeff.alphabet != PSI_ALPHABET:
            raise ValueError("eval_series expects coefficients over the letters O12, O23")
        acc = SparseMatrix.zeros(d3, d3)
        for word, scal in coeff.sorted_terms():
            prod = eye
            for letter in word:
                prod = prod * letters[letter]
            acc = acc + prod.scale(scal)
        out.append(acc)
    return HSeries(out)


@dataclass
class SpectralReport:
    trace: Fraction
    min_poly: list[Fraction]
    factors: list[tuple[Fraction, int, int]]  # (root, multiplicity, kernel dim)
    residual_degree: int
    annihilates: bool

    def factored_text(self) -> str:
        parts = []
        for root, mult, _ in self.factors:
            if root == 0:
                base = "x"
            elif root > 0:
                base = f"(x - {root})"
            else:
                base = f"(x + {-root})"
            parts.append(base if mult == 1 else f"{base}^{mult}")
        if self.residual_degree:
            parts.append(f"<irreducible part of degree {self.residual_degree}>")
        return "*".join(parts) if parts else "1"

    def to_json(self) -> dict:
        return {
            "trace": str(self.trace),
            "min_poly": [str(c) for c in self.min_poly],
            "factored": self.factored_text(),
            "eigenvalues": [
                {"value": str(root), "multiplicity": mult, "kernel_dim": dim}
                for root, mult, dim in self.factors
            ],
            "annihilates": self.annihilates,
        }


def _poly_eval(coeffs: list[Fraction], x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def _poly_divide_linear(coeffs: list[Fraction], root: Fraction) -> list[Fraction]:
    # Synthetic division by (x - root); the remainder must vanish.
    out = [Fraction(0)] * (len(coeffs) - 1)
    carry = Fraction(0)
    for k in range(len(coeffs) - 1, 0, -1):
        carry = coeffs[k] + carry * root
        out[k - 1] = carry
    assert coeffs[0] + carry * root == 0
    return out


def _rational_roots(coeffs: list[Fraction]) -> list[Fraction]:
    lcm = 1
    for c in coeffs:
        lcm = lcm * c.denominator // _gcd(lcm, c.denominator)
    ints = [int(c * lcm) for c in coeffs]
    while ints and ints[-1] == 0:
        ints.pop()
    roots = []
    work = list(coeffs)
    if work[0] == 0:
        roots.append(Fraction(0))
    lead = abs(ints[-1])
    const = next((abs(v) for v in ints if v), 0)
    candidates = set()
    for p in _divisors(const):
        for q in _divisors(lead):
            candidates.add(Fraction(p, q))
            candidates.add(Fraction(-p, q))
    for cand in sorted(candidates):
        if _poly_eval(coeffs, cand) == 0 and cand != 0:
            roots.append(cand)
    return sorted(roots)


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return abs(a)


def _divisors(n: int) -> list[int]:
    n = abs(n)
    if n == 0:
        return [1]
    out = []
    d = 1
    while d * d <= n:
        if n % d == 0:
            out.extend((d, n // d))
        d += 1
    return sorted(set(out))


def spectral_report(matrix: SparseMatrix) -> SpectralReport:
    """Exact spectral data: trace, minimal polynomial, rational linear
    factors with multiplicities, and kernel dimensions by rank."""
    coeffs = minimal_polynomial(matrix)
    n = matrix.rows
    factors = []
    work = list(coeffs)
    for root in _rational_roots(coeffs):
        mult = 0
        while len(work) > 1 and _poly_eval(work, root) == 0:
            work = _poly_divide_linear(work, root)
            mult += 1
        shifted = matrix - SparseMatrix.identity(n).scale(Scalar.rational(root))
        kernel = n - shifted.rank()
        factors.append((root, mult, kernel))
    eye = SparseMatrix.identity(n)
    acc = SparseMatrix.zeros(n, n)
    power = eye
    for c in coeffs:
        acc = acc + power.scale(Scalar.rational(c))
        power = power * matrix
    return SpectralReport(
        trace=matrix.trace().as_fraction(),
        min_poly=coeffs,
        factors=factors,
        residual_degree=len(work) - 1,
        annihilates=acc.is_zero,
    )

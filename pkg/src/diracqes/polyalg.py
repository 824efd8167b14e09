"""Polynomial algebra and 2x2 matrix differential operators.

Everything downstream (exact spectra, QES constraint systems, oracle
cross-checks) is built on four ingredients implemented here:

- ``Poly``: dense real-coefficient polynomials in one working variable.
- ``PolySpinor``: an (upper, lower) pair of polynomials.
- ``RadialOperator``: a 2x2 first-order matrix differential operator whose
  entries are sums of terms ``c * v**k * (d/dv)**j`` with ``k >= -1`` and
  ``j in {0, 1}``; the 1/v terms are tracked symbolically so cancellation
  at the origin is exact by construction.
- ``GaugeTransform``: the composite similarity transformation
  (rotation, power/exponential prefactor, constant factors, shear,
  premultiplication, variable change) that exposes polynomial-preserving
  structure, together with ``conjugate`` which carries it out.

``ScalarDiffOp`` supports the scalar second-order reductions and their
generator algebra.

All operations are pure functions over immutable values.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import PoleError, StructureError, ValidationError
from .model import ProblemInstance

__all__ = [
    "Poly",
    "PolySpinor",
    "RadialOperator",
    "GaugeTransform",
    "VarChange",
    "Premultiply",
    "radial_operator",
    "conjugate",
    "matrix_rep",
    "matrix_rep_with_shape",
    "overflow_rows",
    "nullspace",
    "sigma_min",
    "operator_residual",
    "gauge_equivalence_residual",
    "ScalarDiffOp",
]

# Relative threshold below which a coefficient produced by an (analytically
# exact) cancellation is treated as zero.  Measured headroom in this package
# is ~1e-16 residuals against O(1) coefficients.
_CLEAN_RTOL = 1e-12


# ---------------------------------------------------------------------------
# Polynomials
# ---------------------------------------------------------------------------

def _strip(coeffs: Iterable[float]) -> tuple[float, ...]:
    cs = [float(c) for c in coeffs]
    while cs and cs[-1] == 0.0:
        cs.pop()
    return tuple(cs)


@dataclass(frozen=True)
class Poly:
    """Dense polynomial; ``coeffs[i]`` multiplies ``v**i``.

    The zero polynomial has an empty coefficient tuple and degree -1.
    The trailing stored coefficient is always nonzero.
    """

    coeffs: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "coeffs", _strip(self.coeffs))

    # -- constructors -------------------------------------------------
    @staticmethod
    def zero() -> "Poly":
        return Poly(())

    @staticmethod
    def const(c: float) -> "Poly":
        return Poly((float(c),))

    @staticmethod
    def monomial(k: int, c: float = 1.0) -> "Poly":
        if k < 0:
            raise ValidationError("monomial power must be nonnegative")
        return Poly((0.0,) * k + (float(c),))

    # -- structure ----------------------------------------------------
    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def __getitem__(self, k: int) -> float:
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else 0.0

    def max_abs(self) -> float:
        return max((abs(c) for c in self.coeffs), default=0.0)

    # -- arithmetic ---------------------------------------------------
    def __add__(self, other: "Poly") -> "Poly":
        n = max(len(self.coeffs), len(other.coeffs))
        return Poly(tuple(self[i] + other[i] for i in range(n)))

    def __sub__(self, other: "Poly") -> "Poly":
        n = max(len(self.coeffs), len(other.coeffs))
        return Poly(tuple(self[i] - other[i] for i in range(n)))

    def __neg__(self) -> "Poly":
        return Poly(tuple(-c for c in self.coeffs))

    def scale(self, c: float) -> "Poly":
        c = float(c)
        return Poly(tuple(c * a for a in self.coeffs))

    def __mul__(self, other: "Poly") -> "Poly":
        if self.is_zero() or other.is_zero():
            return Poly.zero()
        out = [0.0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return Poly(tuple(out))

    def deriv(self) -> "Poly":
        return Poly(tuple(i * c for i, c in enumerate(self.coeffs) if i)) \
            if len(self.coeffs) > 1 else Poly.zero()

    def shift(self, k: int) -> "Poly":
        """Multiply by v**k (k >= 0)."""
        if k < 0:
            raise ValidationError("shift power must be nonnegative")
        if self.is_zero():
            return self
        return Poly((0.0,) * k + self.coeffs)

    def __call__(self, v: float) -> float:
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * v + c
        return acc

    def deriv_at(self, v: float) -> float:
        acc = 0.0
        for i in range(len(self.coeffs) - 1, 0, -1):
            acc = acc * v + i * self.coeffs[i]
        return acc


@dataclass(frozen=True)
class PolySpinor:
    """Two-component polynomial spinor; both components use one working
    variable (``"r"`` or ``"x"``)."""

    upper: Poly
    lower: Poly
    var: str = "r"

    def max_abs(self) -> float:
        return max(self.upper.max_abs(), self.lower.max_abs())


# ---------------------------------------------------------------------------
# 2x2 matrix differential operators
# ---------------------------------------------------------------------------

Term = tuple[int, int]          # (power k >= -1, derivative order j in {0,1})
EntryMap = Mapping[Term, float]


def _clean_entry(entry: EntryMap, scale: float) -> dict[Term, float]:
    tol = _CLEAN_RTOL * scale
    return {kj: c for kj, c in entry.items() if abs(c) > tol}


def _entry_scale(entries: Iterable[EntryMap]) -> float:
    s = 0.0
    for e in entries:
        for c in e.values():
            s = max(s, abs(c))
    return s if s > 0.0 else 1.0


@dataclass(frozen=True)
class RadialOperator:
    """2x2 first-order matrix differential operator.

    ``entries[i][j]`` maps ``(k, d)`` to the coefficient of
    ``v**k * (d/dv)**d`` in the (i, j) entry; ``k >= -1``, ``d in {0, 1}``.
    """

    e00: dict[Term, float]
    e01: dict[Term, float]
    e10: dict[Term, float]
    e11: dict[Term, float]
    var: str = "r"

    def __post_init__(self) -> None:
        for name in ("e00", "e01", "e10", "e11"):
            entry = {
                (int(k), int(d)): float(c)
                for (k, d), c in getattr(self, name).items()
                if c != 0.0
            }
            for (k, d) in entry:
                if k < -1:
                    raise StructureError(
                        f"entry {name} has pole order {-k} > 1"
                    )
                if d not in (0, 1):
                    raise StructureError(
                        f"entry {name} has derivative order {d} > 1"
                    )
            object.__setattr__(self, name, entry)

    def entry(self, i: int, j: int) -> dict[Term, float]:
        return (self.e00, self.e01, self.e10, self.e11)[2 * i + j]

    def entries(self) -> tuple[dict[Term, float], ...]:
        return (self.e00, self.e01, self.e10, self.e11)

    def scale(self) -> float:
        return _entry_scale(self.entries())

    # -- linear structure --------------------------------------------
    def __add__(self, other: "RadialOperator") -> "RadialOperator":
        if self.var != other.var:
            raise ValidationError("cannot add operators in different variables")
        out = []
        for a, b in zip(self.entries(), other.entries()):
            e = dict(a)
            for kj, c in b.items():
                e[kj] = e.get(kj, 0.0) + c
            out.append(e)
        return RadialOperator(*out, var=self.var)

    def scaled(self, c: float) -> "RadialOperator":
        c = float(c)
        return RadialOperator(
            *({kj: c * v for kj, v in e.items()} for e in self.entries()),
            var=self.var,
        )

    # -- action on spinors -------------------------------------------
    def _apply_entry(
        self, entry: EntryMap, p: Poly
    ) -> tuple[Poly, float]:
        """Apply one entry to one polynomial; returns (polynomial part,
        residue of the uncancelled 1/v pole)."""
        acc = Poly.zero()
        residue = 0.0
        for (k, d), c in entry.items():
            q = p.deriv() if d else p
            if q.is_zero():
                continue
            if k >= 0:
                acc = acc + q.shift(k).scale(c)
            else:  # k == -1
                residue += c * q[0]
                tail = Poly(q.coeffs[1:])  # (q - q0)/v
                acc = acc + tail.scale(c)
        return acc, residue

    def apply(self, psi: PolySpinor) -> PolySpinor:
        """Formally apply the operator; raises ``PoleError`` if the 1/v
        contributions to either component fail to cancel."""
        if psi.var != self.var:
            raise ValidationError(
                f"operator in {self.var!r} applied to spinor in {psi.var!r}"
            )
        scale = self.scale() * max(psi.max_abs(), 1.0)
        rows = []
        for i in (0, 1):
            a, res_a = self._apply_entry(self.entry(i, 0), psi.upper)
            b, res_b = self._apply_entry(self.entry(i, 1), psi.lower)
            residue = res_a + res_b
            if abs(residue) > _CLEAN_RTOL * scale:
                raise PoleError(
                    f"uncancelled 1/{self.var} term in component {i}: "
                    f"residue {residue:.6g}",
                    residue=residue,
                )
            rows.append(a + b)
        return PolySpinor(rows[0], rows[1], var=self.var)


def radial_operator(inst: ProblemInstance, epsilon: float) -> RadialOperator:
    """The physical 2x2 operator of a problem instance at energy epsilon,
    in the radial variable r.

    Solutions of the physical problem are exactly the kernel of this
    operator; see the model module docstring for the sign conventions.
    """
    par, pot = inst.params, inst.potentials
    mu = par.mu_n
    e00: dict[Term, float] = {(0, 1): 1.0, (-1, 0): -par.kappa}
    e11: dict[Term, float] = {(0, 1): 1.0, (-1, 0): par.kappa}
    for i, g in enumerate(pot.gamma_poly):
        if g:
            e00[(i, 0)] = e00.get((i, 0), 0.0) - mu * g
            e11[(i, 0)] = e11.get((i, 0), 0.0) + mu * g
    e01: dict[Term, float] = {(0, 0): par.M - epsilon}
    if pot.beta - pot.alpha:
        e01[(-1, 0)] = pot.beta - pot.alpha
    e10: dict[Term, float] = {(0, 0): par.M + epsilon}
    if pot.beta + pot.alpha:
        e10[(-1, 0)] = pot.beta + pot.alpha
    s = max(len(pot.alpha_poly), len(pot.beta_poly))
    for i in range(s):
        av = pot.alpha_poly[i] if i < len(pot.alpha_poly) else 0.0
        bv = pot.beta_poly[i] if i < len(pot.beta_poly) else 0.0
        if bv - av:
            e01[(i + 1, 0)] = bv - av
        if bv + av:
            e10[(i + 1, 0)] = bv + av
    return RadialOperator(e00, e01, e10, e11, var="r")


# ---------------------------------------------------------------------------
# Gauge transforms and conjugation
# ---------------------------------------------------------------------------

class VarChange(enum.Enum):
    NONE = "none"
    X_EQUALS_R_SQUARED = "x=r^2"


class Premultiply(enum.Enum):
    ONE = 0
    R = 1
    X = 2

    @property
    def power(self) -> int:
        return self.value


_IDENTITY2 = ((1.0, 0.0), (0.0, 1.0))

Mat2 = tuple[tuple[float, float], tuple[float, float]]


def _mat2(m: Sequence[Sequence[float]]) -> Mat2:
    return (
        (float(m[0][0]), float(m[0][1])),
        (float(m[1][0]), float(m[1][1])),
    )


def _mat2_mul(a: Mat2, b: Mat2) -> Mat2:
    return tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(2)) for j in range(2))
        for i in range(2)
    )  # type: ignore[return-value]


def _mat2_inv(a: Mat2) -> Mat2:
    det = a[0][0] * a[1][1] - a[0][1] * a[1][0]
    if det == 0.0:
        raise ValidationError("constant factor is singular")
    return (
        (a[1][1] / det, -a[0][1] / det),
        (-a[1][0] / det, a[0][0] / det),
    )


@dataclass(frozen=True)
class GaugeTransform:
    """Composite similarity transformation.

    The transformed operator produced by ``conjugate`` is

        H~  =  L . (D^-1 U^-1 H U D) . K,         K = C_right . Shear(y),

    followed by the declared premultiplication (row scaling by r or r^2)
    and variable change.  Here

    - ``U`` is the rotation by ``omega``:  [[cos w, -sin w], [sin w, cos w]];
    - ``D(r) = diag(r^theta_upper, r^theta_lower) * exp(-lambda2 r^2/2 - lambda1 r)``;
    - ``L`` (``constant_left``) and ``C_right`` are constant matrices;
    - ``Shear(y) = [[1, y], [0, 1]]`` with ``y = shear``.

    Kernel correspondence: ``H~ phi = 0`` exactly when ``H psi = 0`` for
    the physical spinor ``psi(r) = U D(r) K phi(x(r))``.
    """

    theta_upper: float = 0.0
    theta_lower: float = 0.0
    lambda1: float = 0.0
    lambda2: float = 0.0
    omega: float = 0.0
    shear: float = 0.0
    constant_left: Mat2 = _IDENTITY2
    constant_right: Mat2 = _IDENTITY2
    variable_change: VarChange = VarChange.NONE
    premultiply: Premultiply = Premultiply.ONE

    def __post_init__(self) -> None:
        object.__setattr__(self, "constant_left", _mat2(self.constant_left))
        object.__setattr__(self, "constant_right", _mat2(self.constant_right))

    def rotation_matrix(self) -> Mat2:
        c, s = math.cos(self.omega), math.sin(self.omega)
        return ((c, -s), (s, c))

    def right_factor(self) -> Mat2:
        return _mat2_mul(self.constant_right, ((1.0, self.shear), (0.0, 1.0)))

    def inverse_right_factor(self) -> Mat2:
        return _mat2_inv(self.right_factor())

    # -- numeric realization (used for back-transformation checks) ----
    def prefactor(self, i: int, r: float) -> float:
        theta = self.theta_upper if i == 0 else self.theta_lower
        return r ** theta * math.exp(-0.5 * self.lambda2 * r * r - self.lambda1 * r)

    def prefactor_logderiv(self, i: int, r: float) -> float:
        theta = self.theta_upper if i == 0 else self.theta_lower
        return theta / r - self.lambda2 * r - self.lambda1

    def argument(self, r: float) -> float:
        """Value of the operator's working variable at radius r."""
        if self.variable_change is VarChange.X_EQUALS_R_SQUARED:
            return r * r
        return r

    def argument_deriv(self, r: float) -> float:
        if self.variable_change is VarChange.X_EQUALS_R_SQUARED:
            return 2.0 * r
        return 1.0

    def physical_spinor(
        self, phi: PolySpinor
    ) -> Callable[[float], tuple[float, float, float, float]]:
        """Map a transformed-frame polynomial spinor to the physical
        solution; returns a callable r -> (f, g, f', g')."""
        K = self.right_factor()
        U = self.rotation_matrix()
        comb_u = phi.upper.scale(K[0][0]) + phi.lower.scale(K[0][1])
        comb_l = phi.upper.scale(K[1][0]) + phi.lower.scale(K[1][1])

        def evaluate(r: float) -> tuple[float, float, float, float]:
            xr = self.argument(r)
            dx = self.argument_deriv(r)
            vals = (comb_u(xr), comb_l(xr))
            dvals = (comb_u.deriv_at(xr) * dx, comb_l.deriv_at(xr) * dx)
            comp = [0.0, 0.0]
            dcomp = [0.0, 0.0]
            for i in (0, 1):
                for j in (0, 1):
                    pref = self.prefactor(j, r)
                    dpref = pref * self.prefactor_logderiv(j, r)
                    comp[i] += U[i][j] * pref * vals[j]
                    dcomp[i] += U[i][j] * (dpref * vals[j] + pref * dvals[j])
            return comp[0], comp[1], dcomp[0], dcomp[1]

        return evaluate


def _rotate_entries(
    entries: tuple[dict[Term, float], ...], U: Mat2
) -> list[dict[Term, float]]:
    """U^T . H . U for a constant orthogonal U."""
    Ut = ((U[0][0], U[1][0]), (U[0][1], U[1][1]))
    out: list[dict[Term, float]] = [dict() for _ in range(4)]
    for i in range(2):
        for j in range(2):
            acc = out[2 * i + j]
            for k in range(2):
                for l in range(2):
                    w = Ut[i][k] * U[l][j]
                    if w == 0.0:
                        continue
                    for kj, c in entries[2 * k + l].items():
                        acc[kj] = acc.get(kj, 0.0) + w * c
    return out


def _mix_left(
    entries: list[dict[Term, float]], L: Mat2
) -> list[dict[Term, float]]:
    out: list[dict[Term, float]] = [dict() for _ in range(4)]
    for i in range(2):
        for j in range(2):
            acc = out[2 * i + j]
            for k in range(2):
                w = L[i][k]
                if w == 0.0:
                    continue
                for kj, c in entries[2 * k + j].items():
                    acc[kj] = acc.get(kj, 0.0) + w * c
    return out


def _mix_right(
    entries: list[dict[Term, float]], K: Mat2
) -> list[dict[Term, float]]:
    out: list[dict[Term, float]] = [dict() for _ in range(4)]
    for i in range(2):
        for j in range(2):
            acc = out[2 * i + j]
            for l in range(2):
                w = K[l][j]
                if w == 0.0:
                    continue
                for kj, c in entries[2 * i + l].items():
                    acc[kj] = acc.get(kj, 0.0) + w * c
    return out


def conjugate(op: RadialOperator, g: GaugeTransform) -> RadialOperator:
    """Carry out the full similarity transformation of ``g`` on ``op``.

    Raises ``StructureError`` if the result cannot be expressed with pole
    order <= 1 and (under the x = r^2 change) integer powers of x.
    """
    if op.var != "r":
        raise ValidationError("conjugate expects an operator in r")

    # 1. rotation
    entries = _rotate_entries(op.entries(), g.rotation_matrix())

    # 2. scalar gauge prefactors
    thetas = (g.theta_upper, g.theta_lower)
    gauged: list[dict[Term, float]] = []
    for i in range(2):
        for j in range(2):
            delta = thetas[j] - thetas[i]
            delta_int = round(delta)
            if abs(delta - delta_int) > 1e-9:
                raise StructureError(
                    "prefactor exponent difference "
                    f"{delta} is not an integer; entry ({i},{j}) leaves the "
                    "polynomial family"
                )
            e = entries[2 * i + j]
            out: dict[Term, float] = {}

            def _acc(k: int, d: int, c: float) -> None:
                if c:
                    out[(k, d)] = out.get((k, d), 0.0) + c

            for (k, d), c in e.items():
                kk = k + delta_int
                if d == 1:
                    _acc(kk, 1, c)
                    # chain-rule term from the prefactor of column j
                    _acc(kk - 1, 0, c * thetas[j])
                    _acc(kk, 0, -c * g.lambda1)
                    _acc(kk + 1, 0, -c * g.lambda2)
                else:
                    _acc(kk, 0, c)
            gauged.append(out)

    # 3./4. constant factors
    mixed = _mix_right(_mix_left(gauged, g.constant_left), g.right_factor())

    # clean float residues of analytically exact cancellations before the
    # structural checks below
    scale = _entry_scale(mixed)
    mixed = [_clean_entry(e, scale) for e in mixed]

    # 5. premultiplication (row scaling by r^m)
    m = g.premultiply.power
    if m:
        mixed = [
            {(k + m, d): c for (k, d), c in e.items()} for e in mixed
        ]

    # 6. variable change
    if g.variable_change is VarChange.X_EQUALS_R_SQUARED:
        changed: list[dict[Term, float]] = []
        for idx, e in enumerate(mixed):
            out = {}
            for (k, d), c in e.items():
                if d == 0:
                    if k % 2 != 0 or k < 0:
                        raise StructureError(
                            f"multiplicative term r^{k} in entry "
                            f"({idx // 2},{idx % 2}) has no x = r^2 image"
                        )
                    kj = (k // 2, 0)
                    out[kj] = out.get(kj, 0.0) + c
                else:
                    # c r^k d/dr = 2 c x^((k+1)/2) d/dx for odd k
                    if k % 2 == 0:
                        raise StructureError(
                            f"derivative term r^{k} d/dr in entry "
                            f"({idx // 2},{idx % 2}) has no x = r^2 image"
                        )
                    kj = ((k + 1) // 2, 1)
                    out[kj] = out.get(kj, 0.0) + 2.0 * c
            changed.append(out)
        mixed = changed
        var = "x"
    else:
        var = "r"

    for idx, e in enumerate(mixed):
        for (k, d) in e:
            if k < -1:
                raise StructureError(
                    f"entry ({idx // 2},{idx % 2}) has pole order {-k} > 1 "
                    "after conjugation"
                )
    return RadialOperator(*mixed, var=var)


# ---------------------------------------------------------------------------
# Finite matrix representations
# ---------------------------------------------------------------------------

def _basis_spinors(
    deg_upper: int, deg_lower: int, var: str
) -> list[PolySpinor]:
    basis = []
    for k in range(deg_upper + 1):
        basis.append(PolySpinor(Poly.monomial(k), Poly.zero(), var=var))
    for k in range(deg_lower + 1):
        basis.append(PolySpinor(Poly.zero(), Poly.monomial(k), var=var))
    return basis


def matrix_rep_with_shape(
    op: RadialOperator, deg_upper: int, deg_lower: int
) -> tuple[np.ndarray, int, int]:
    """Matrix of ``op`` on the monomial basis of P(deg_upper) (+) P(deg_lower).

    Degrees of -1 denote the zero space (no basis vectors).  Returns
    ``(mat, rows_upper, rows_lower)``: the first ``rows_upper`` rows hold
    the upper-component image coefficients (powers 0 .. rows_upper-1), the
    remaining ``rows_lower`` rows the lower ones.  Rows always cover both
    the input degrees and every image degree, so "overflow rows" are the
    upper rows with power > deg_upper and lower rows with power > deg_lower.
    """
    if deg_upper < -1 or deg_lower < -1:
        raise ValidationError("degrees must be >= -1")
    basis = _basis_spinors(deg_upper, deg_lower, op.var)
    images = [op.apply(b) for b in basis]
    img_up = max([deg_upper] + [im.upper.degree for im in images])
    img_low = max([deg_lower] + [im.lower.degree for im in images])
    rows_upper = img_up + 1
    rows_lower = img_low + 1
    mat = np.zeros((rows_upper + rows_lower, len(basis)))
    for col, im in enumerate(images):
        for k, c in enumerate(im.upper.coeffs):
            mat[k, col] = c
        for k, c in enumerate(im.lower.coeffs):
            mat[rows_upper + k, col] = c
    return mat, rows_upper, rows_lower


def matrix_rep(op: RadialOperator, deg_upper: int, deg_lower: int) -> np.ndarray:
    mat, _, _ = matrix_rep_with_shape(op, deg_upper, deg_lower)
    return mat


def overflow_rows(
    mat: np.ndarray, deg_upper: int, deg_lower: int, rows_upper: int
) -> np.ndarray:
    """The rows of a ``matrix_rep_with_shape`` result whose image power
    exceeds the corresponding input degree."""
    upper_over = mat[deg_upper + 1:rows_upper, :]
    lower_over = mat[rows_upper + deg_lower + 1:, :]
    return np.vstack([upper_over, lower_over])


def nullspace(
    mat: np.ndarray, tol: float, scale: float | None = None
) -> list[np.ndarray]:
    """Orthonormal basis of the numerical nullspace: right singular
    vectors whose singular value is below ``tol * sigma_max``.

    When ``scale`` is given, the threshold is ``tol * max(sigma_max,
    scale)``; pass the coefficient scale of the operator that generated
    the matrix so that a matrix which is small in its entirety (every
    entry a cancellation residue) still reports a full kernel."""
    mat = np.asarray(mat, dtype=float)
    if mat.size == 0:
        raise ValidationError("nullspace of an empty matrix is undefined")
    if tol <= 0:
        raise ValidationError("tol must be positive")
    _, svals, vt = np.linalg.svd(mat)
    smax = svals[0] if len(svals) else 0.0
    ref = max(smax, scale if scale is not None else 0.0)
    ncols = mat.shape[1]
    if ref == 0.0:
        return [vt[i] for i in range(ncols)]
    out = []
    for i in range(ncols):
        sv = svals[i] if i < len(svals) else 0.0
        if sv < tol * ref:
            out.append(vt[i])
    return out


def sigma_min(mat: np.ndarray) -> float:
    """Smallest singular value of a (possibly rectangular) matrix."""
    mat = np.asarray(mat, dtype=float)
    if mat.size == 0:
        raise ValidationError("sigma_min of an empty matrix is undefined")
    svals = np.linalg.svd(mat, compute_uv=False)
    return float(svals[min(mat.shape) - 1])


# ---------------------------------------------------------------------------
# Numeric residual of an operator on a realized solution
# ---------------------------------------------------------------------------

def operator_residual(
    op: RadialOperator,
    evaluate: Callable[[float], tuple[float, float, float, float]],
    radii: Sequence[float],
) -> float:
    """Max relative residual of ``op`` acting on a numerically realized
    spinor, sampled at the given radii.

    ``evaluate`` maps r to (f, g, f', g').  The residual of each row is
    compared against the largest single term contributing to it, so an
    exact solution reports rounding level regardless of overall scale."""
    num = 0.0
    den = 0.0
    for r in radii:
        f, g, df, dg = evaluate(r)
        vals = (f, g)
        dvals = (df, dg)
        for i in (0, 1):
            acc = 0.0
            mag = 0.0
            for j in (0, 1):
                for (k, d), c in op.entry(i, j).items():
                    term = c * r**k * (dvals[j] if d else vals[j])
                    acc += term
                    mag = max(mag, abs(term))
            num = max(num, abs(acc))
            den = max(den, mag)
    return num / max(den, 1e-300)


# ---------------------------------------------------------------------------
# Conjugation equivalence check (numeric)
# ---------------------------------------------------------------------------

def gauge_equivalence_residual(
    op: RadialOperator,
    g: GaugeTransform,
    phi: PolySpinor,
    radii: Sequence[float],
) -> float:
    """Max relative discrepancy, over the sample radii, between

    - the transformed operator applied to ``phi`` as polynomial algebra, and
    - the untransformed operator applied to the physical realization
      ``psi = U D K phi`` and mapped back through ``L D^-1 U^T`` and the
      premultiplier.

    A correct ``conjugate`` drives this to rounding level for any
    polynomial spinor.
    """
    tilde = conjugate(op, g)
    lhs_poly = tilde.apply(
        PolySpinor(phi.upper, phi.lower, var=tilde.var)
    )
    evaluate = g.physical_spinor(phi)
    U = g.rotation_matrix()
    Ut = ((U[0][0], U[1][0]), (U[0][1], U[1][1]))
    L = g.constant_left
    worst = 0.0
    for r in radii:
        f, gg, df, dg = evaluate(r)
        # H psi at r, using the entry termwise definition
        hpsi = [0.0, 0.0]
        vals = (f, gg)
        dvals = (df, dg)
        for i in (0, 1):
            for j in (0, 1):
                for (k, d), c in op.entry(i, j).items():
                    base = dvals[j] if d else vals[j]
                    hpsi[i] += c * r ** k * base
        # back through D^-1 U^T, then L, then premultiplier
        back = [0.0, 0.0]
        for i in (0, 1):
            acc = 0.0
            for j in (0, 1):
                acc += Ut[i][j] * hpsi[j]
            back[i] = acc / g.prefactor(i, r)
        mixed = [
            L[0][0] * back[0] + L[0][1] * back[1],
            L[1][0] * back[0] + L[1][1] * back[1],
        ]
        pm = r ** g.premultiply.power
        rhs = (mixed[0] * pm, mixed[1] * pm)
        xr = g.argument(r)
        lhs = (lhs_poly.upper(xr), lhs_poly.lower(xr))
        scale = max(abs(lhs[0]), abs(lhs[1]), abs(rhs[0]), abs(rhs[1]), 1e-30)
        worst = max(
            worst,
            abs(lhs[0] - rhs[0]) / scale,
            abs(lhs[1] - rhs[1]) / scale,
        )
    return worst


# ---------------------------------------------------------------------------
# Scalar differential operators (second-order reductions, generators)
# ---------------------------------------------------------------------------

STerm = tuple[int, int]  # (power k >= 0, derivative order j >= 0)


@dataclass(frozen=True)
class ScalarDiffOp:
    """Scalar operator sum of ``c * x**k * (d/dx)**j`` terms (k, j >= 0)."""

    terms: tuple[tuple[STerm, float], ...] = ()

    def __post_init__(self) -> None:
        merged: dict[STerm, float] = {}
        for (k, j), c in self.terms:
            if k < 0 or j < 0:
                raise ValidationError("ScalarDiffOp powers must be >= 0")
            if c:
                key = (int(k), int(j))
                merged[key] = merged.get(key, 0.0) + float(c)
        object.__setattr__(
            self,
            "terms",
            tuple(sorted((kj, c) for kj, c in merged.items() if c != 0.0)),
        )

    @staticmethod
    def from_dict(d: Mapping[STerm, float]) -> "ScalarDiffOp":
        return ScalarDiffOp(tuple(d.items()))

    def as_dict(self) -> dict[STerm, float]:
        return dict(self.terms)

    def __add__(self, other: "ScalarDiffOp") -> "ScalarDiffOp":
        return ScalarDiffOp(self.terms + other.terms)

    def __sub__(self, other: "ScalarDiffOp") -> "ScalarDiffOp":
        return self + other.scaled(-1.0)

    def scaled(self, c: float) -> "ScalarDiffOp":
        return ScalarDiffOp(tuple((kj, c * v) for kj, v in self.terms))

    def compose(self, other: "ScalarDiffOp") -> "ScalarDiffOp":
        """Operator product self . other (apply ``other`` first)."""
        out: dict[STerm, float] = {}
        for (k1, j1), c1 in self.terms:
            for (k2, j2), c2 in other.terms:
                # commute d^j1 past x^k2:
                # d^j1 x^k2 = sum_i C(j1,i) (k2)_i x^(k2-i) d^(j1-i)
                for i in range(min(j1, k2) + 1):
                    coeff = c1 * c2 * math.comb(j1, i) * math.perm(k2, i)
                    key = (k1 + k2 - i, j1 - i + j2)
                    out[key] = out.get(key, 0.0) + coeff
        return ScalarDiffOp(tuple(out.items()))

    def apply(self, p: Poly) -> Poly:
        acc = Poly.zero()
        for (k, j), c in self.terms:
            q = p
            for _ in range(j):
                q = q.deriv()
            if not q.is_zero():
                acc = acc + q.shift(k).scale(c)
        return acc

    def max_abs(self) -> float:
        return max((abs(c) for _, c in self.terms), default=0.0)

    def isclose(self, other: "ScalarDiffOp", rtol: float = 1e-12) -> bool:
        scale = max(self.max_abs(), other.max_abs(), 1.0)
        a, b = self.as_dict(), other.as_dict()
        for key in set(a) | set(b):
            if abs(a.get(key, 0.0) - b.get(key, 0.0)) > rtol * scale:
                return False
        return True

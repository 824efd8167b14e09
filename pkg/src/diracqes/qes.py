"""Quasi-exactly-solvable (QES) constraint systems.

Two families admit polynomial solutions only on a constraint surface in
coupling space:

- the planar 1/x coupling in a uniform linear field ("planar system"):
  a polynomial ansatz (P of degree n+1, Q of degree n) turns the coupled
  first-order equations into an overdetermined linear system; its
  solvability pins the power-law exponent, quantizes the energy, and
  leaves one transcendental condition on the coupling, located here by
  scanning the smallest singular value;

- the extended linear family off its exactly solvable surface ("extended
  system"): a scalar gauge factor r^theta exp(-l2 r^2/2 - l1 r) and a
  rotation reduce the pair to a banded linear system in the polynomial
  coefficients; solvability yields an energy condition in closed form
  (verified as an exact product identity of the system's coefficients)
  plus one remaining condition scanned over the constant coupling.

The final section realizes the associated scalar second-order operator,
its decomposition in terms of first-order generators acting on
polynomials of fixed degree, and the annihilation diagnostics that tie
it back to the planar solutions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import (
    DomainError,
    NoAlgebraicSolutionError,
    SingularConfigurationError,
    SupercriticalCouplingError,
    ValidationError,
)
from .model import Preset, ProblemInstance, preset
from .polyalg import GaugeTransform, Poly, PolySpinor, ScalarDiffOp

__all__ = [
    "PlanarSystem",
    "PlanarSolution",
    "planar_build",
    "planar_solve",
    "planar_n0_closed_form",
    "planar_to_instance",
    "planar_physical_solution",
    "ExtendedQesSystem",
    "ExtendedQesCoefficients",
    "ExtendedQesSolution",
    "extended_build",
    "extended_solve",
    "extended_to_instance",
    "extended_physical_solution",
    "sl2_generators",
    "realize_generator_poly",
    "t_display",
    "t_corrected",
    "t_qes_parts",
    "t_roundtrip_residual",
    "planar_t_parameters",
    "t_action_matrix",
]


# ---------------------------------------------------------------------------
# Shared scan machinery
# ---------------------------------------------------------------------------

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_min(
    f: Callable[[float], float], a: float, b: float, tol: float = 1e-12
) -> tuple[float, float]:
    """Golden-section minimization of a unimodal (possibly V-shaped)
    function on [a, b]."""
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(200):
        if b - a < tol * max(1.0, abs(a), abs(b)):
            break
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = f(x2)
    xm = 0.5 * (a + b)
    return xm, f(xm)


def _scan_roots(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    points: int,
    accept_ratio: float = 1e-8,
) -> list[tuple[float, float]]:
    """Locate parameter values where ``f`` (a smallest-singular-value
    profile; NaN marks infeasible points) dips to numerical zero.

    Local minima of the grid profile are refined by golden section; a
    refined minimum qualifies as a root when the value is below
    ``accept_ratio`` (callers pass f pre-normalized by the matrix norm).
    Grid endpoints and points bordering infeasible (NaN) stretches count
    as minima against their finite neighbors only, so roots sitting
    exactly on a range boundary or beside a forbidden region are still
    found.  The refined value never replaces a better raw grid value:
    a root landing exactly on a grid node survives even when the profile
    has a cusp there that golden section cannot descend.  Returns
    (parameter, value) pairs in ascending order."""
    if points < 3:
        raise ValidationError("scan needs at least 3 grid points")
    if not lo < hi:
        raise ValidationError(f"empty scan range ({lo}, {hi})")
    grid = np.linspace(lo, hi, points)
    vals = np.array([f(float(g)) for g in grid])
    roots: list[tuple[float, float]] = []

    def refine(i: int) -> None:
        x, fx = float(grid[i]), float(vals[i])
        a = grid[i - 1] if i > 0 and np.isfinite(vals[i - 1]) else grid[i]
        b = (grid[i + 1] if i < points - 1 and np.isfinite(vals[i + 1])
             else grid[i])
        if a < b:
            xg, fg = _golden_min(f, float(a), float(b))
            if math.isfinite(fg) and fg < fx:
                x, fx = xg, fg
        if math.isfinite(fx) and fx < accept_ratio:
            if not any(abs(x - r) <= 1e-8 * max(1.0, abs(x)) for r, _ in roots):
                roots.append((x, fx))

    for i in range(points):
        v = vals[i]
        if not np.isfinite(v):
            continue
        left = vals[i - 1] if i > 0 else math.inf
        right = vals[i + 1] if i < points - 1 else math.inf
        if not np.isfinite(left):
            left = math.inf
        if not np.isfinite(right):
            right = math.inf
        if v <= left and v <= right:
            refine(i)
    roots.sort()
    return roots


def _smallest_singular_pair(mat: np.ndarray) -> tuple[float, float, np.ndarray]:
    """(sigma_min, sigma_max, right singular vector of sigma_min)."""
    _, svals, vt = np.linalg.svd(mat)
    return float(svals[-1]), float(svals[0]), vt[-1]


# ---------------------------------------------------------------------------
# Planar system
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PlanarSystem:
    """Overdetermined linear system of the planar QES family.

    For mass ``M``, angular parameter ``kappa``, and polynomial index
    ``n``, the ansatz P of degree n+1, Q of degree n (in the scaled
    variable) must satisfy

        x P' + (kappa + gamma) P - (eps - M) x Q - alpha Q = 0
        x Q' + (gamma - kappa) Q - x^2 Q + (eps + M) x P + alpha P = 0

    with gamma = sqrt(kappa^2 - alpha^2).  Collecting coefficients of
    x^d gives 2n+5 rows in the 2n+3 unknowns (p_0..p_{n+1}, q_0..q_n);
    the two excess conditions quantize the energy,
    eps^2 = M^2 + gamma + kappa + n + 1, and constrain the coupling
    alpha, which ``planar_solve`` locates by a singular-value scan.
    """

    M: float
    kappa: float
    n: int

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValidationError("polynomial index n must be >= 0")
        if self.kappa == 0.0:
            raise ValidationError("kappa must be nonzero")

    def gamma(self, alpha: float) -> float:
        g2 = self.kappa**2 - alpha * alpha
        if g2 < 0:
            raise SupercriticalCouplingError(
                f"alpha^2 = {alpha * alpha:.6g} exceeds kappa^2 = "
                f"{self.kappa ** 2:.6g}"
            )
        return math.sqrt(g2)

    def epsilon_squared(self, alpha: float) -> float:
        return self.M**2 + self.gamma(alpha) + self.kappa + self.n + 1.0

    def matrix(self, alpha: float, epsilon: float) -> np.ndarray:
        """Coefficient matrix; columns p_0..p_{n+1}, q_0..q_n."""
        n = self.n
        gam = self.gamma(alpha)
        ncols = 2 * n + 3
        rows = 2 * n + 5
        mat = np.zeros((rows, ncols))

        def pcol(d: int) -> int:
            return d

        def qcol(d: int) -> int:
            return n + 2 + d

        r = 0
        for d in range(n + 2):  # first-equation rows
            mat[r, pcol(d)] = d + self.kappa + gam
            if 0 <= d - 1 <= n:
                mat[r, qcol(d - 1)] = -(epsilon - self.M)
            if d <= n:
                mat[r, qcol(d)] = -alpha
            r += 1
        for d in range(n + 3):  # second-equation rows
            if d <= n:
                mat[r, qcol(d)] = d + gam - self.kappa
            if 0 <= d - 2 <= n:
                mat[r, qcol(d - 2)] = -1.0
            if 0 <= d - 1 <= n + 1:
                mat[r, pcol(d - 1)] = epsilon + self.M
            if d <= n + 1:
                mat[r, pcol(d)] = alpha
            r += 1
        return mat

    def sigma_profile(self, alpha: float, sign: int) -> float:
        """sigma_min / sigma_max of the system at coupling ``alpha`` on
        the energy branch ``sign``; NaN when the branch is infeasible."""
        try:
            e2 = self.epsilon_squared(alpha)
        except SupercriticalCouplingError:
            return float("nan")
        if e2 < 0:
            return float("nan")
        eps = sign * math.sqrt(e2)
        smin, smax, _ = _smallest_singular_pair(self.matrix(alpha, eps))
        return smin / max(smax, 1e-300)


@dataclass(frozen=True)
class PlanarSolution:
    """One point of the planar QES constraint surface.

    ``P`` and ``Q`` are the polynomial pair in the scaled variable (P
    normalized monic).  ``epsilon`` and ``alpha`` are in scaled units;
    ``planar_to_instance`` converts one solution to a physical problem
    instance at a chosen field strength."""

    M: float
    kappa: float
    n: int
    sign: int
    alpha: float
    gamma: float
    epsilon: float
    sigma_min: float
    sigma_max: float
    P: Poly
    Q: Poly


def planar_build(M: float, kappa: float, n: int) -> PlanarSystem:
    return PlanarSystem(M=float(M), kappa=float(kappa), n=int(n))


def _planar_solution_at(
    system: PlanarSystem, alpha: float, sign: int
) -> PlanarSolution:
    eps = sign * math.sqrt(system.epsilon_squared(alpha))
    mat = system.matrix(alpha, eps)
    smin, smax, vec = _smallest_singular_pair(mat)
    n = system.n
    p = vec[: n + 2]
    q = vec[n + 2 :]
    pivot = p[n + 1]
    if abs(pivot) > 1e-12 * np.linalg.norm(vec):
        p = p / pivot
        q = q / pivot
    return PlanarSolution(
        M=system.M,
        kappa=system.kappa,
        n=n,
        sign=sign,
        alpha=alpha,
        gamma=system.gamma(alpha),
        epsilon=eps,
        sigma_min=smin,
        sigma_max=smax,
        P=Poly(tuple(p)),
        Q=Poly(tuple(q)),
    )


def planar_solve(
    system: PlanarSystem,
    alpha_range: tuple[float, float] | None = None,
    points: int = 601,
    signs: Sequence[int] = (-1, 1),
) -> list[PlanarSolution]:
    """All couplings in ``alpha_range`` where the planar system acquires
    a kernel, on each requested energy branch.

    The default range spans the closed subcritical interval
    [-|kappa|, |kappa|]; the endpoints are included because the critical
    coupling |alpha| = |kappa| (where the index exponent vanishes) can
    itself carry a solution, and the profile approaches it as a
    square-root cusp that interior sampling cannot resolve.  Solutions
    are returned sorted by (branch sign, coupling).  An empty result
    means the surface has no point in range (not an error)."""
    if alpha_range is None:
        amax = abs(system.kappa)
        alpha_range = (-amax, amax)
    lo, hi = alpha_range
    out: list[PlanarSolution] = []
    for sign in signs:
        if sign not in (-1, 1):
            raise ValidationError("energy branch sign must be -1 or +1")
        roots = _scan_roots(
            lambda a, s=sign: system.sigma_profile(a, s), lo, hi, points
        )
        for alpha, _ in roots:
            out.append(_planar_solution_at(system, alpha, sign))
    out.sort(key=lambda s: (s.sign, s.alpha))
    return out


def planar_n0_closed_form(M: float, kappa: float) -> list[PlanarSolution]:
    """The n = 0 planar constraint surface in closed form.

    Eliminating the linear system by hand gives the two energy branches
    eps = -(M +- sqrt(M^2 + 2))/2 together with
    (eps + M)^2 = -(kappa + gamma), hence
    gamma = -kappa - (eps + M)^2 and alpha^2 = kappa^2 - gamma^2.
    Branches with gamma < 0 or alpha^2 < 0 carry no admissible solution;
    each survivor is validated against the full singular-value test.
    Raises ``NoAlgebraicSolutionError`` when no branch survives (always
    the case for kappa > 0).  The positive-alpha representative is
    returned; the system is symmetric under alpha -> -alpha.
    """
    system = planar_build(M, kappa, 0)
    disc = math.sqrt(M * M + 2.0)
    out: list[PlanarSolution] = []
    for eps in (-(M + disc) / 2.0, -(M - disc) / 2.0):
        gam = -kappa - (eps + M) ** 2
        if gam < -1e-12:
            continue
        gam = max(gam, 0.0)
        a2 = kappa * kappa - gam * gam
        if a2 < -1e-12:
            continue
        alpha = math.sqrt(max(a2, 0.0))
        sign = 1 if eps > 0 else -1
        sol = _planar_solution_at(system, alpha, sign)
        if sol.sigma_min < 1e-8 * max(sol.sigma_max, 1e-300):
            out.append(sol)
    if not out:
        raise NoAlgebraicSolutionError(
            f"the n = 0 planar surface is empty for M={M}, kappa={kappa}"
        )
    out.sort(key=lambda s: (s.sign, s.alpha))
    return out


def planar_to_instance(
    sol: PlanarSolution, btilde: float
) -> tuple[ProblemInstance, float]:
    """Physical problem instance realizing a planar solution at field
    strength ``btilde``, together with the physical bound-state energy.

    The scaled system variables map to the physical ones by
    M_phys = M sqrt(btilde), eps_phys = -eps sqrt(btilde),
    alpha_phys = -alpha; the scaled variable is x = r sqrt(btilde)."""
    if btilde <= 0:
        raise DomainError("btilde must be positive")
    s = math.sqrt(btilde)
    inst = preset(
        Preset.PLANAR_COULOMB_MAGNETIC,
        {
            "M": sol.M * s,
            "kappa": sol.kappa,
            "alpha": -sol.alpha,
            "Btilde": btilde,
        },
    )
    return inst, -sol.epsilon * s


def planar_physical_solution(
    sol: PlanarSolution, btilde: float
) -> Callable[[float], tuple[float, float, float, float]]:
    """Callable r -> (f, g, f', g') for the physical bound state of a
    planar solution: in the scaled variable x = r sqrt(btilde),

        f = x^gamma exp(-x^2/4) Q(x),   g = x^gamma exp(-x^2/4) P(x).
    """
    if btilde <= 0:
        raise DomainError("btilde must be positive")
    s = math.sqrt(btilde)
    gam = sol.gamma
    P, Q = sol.P, sol.Q

    def evaluate(r: float) -> tuple[float, float, float, float]:
        x = s * r
        pref = x**gam * math.exp(-0.25 * x * x)
        logd = gam / r - 0.5 * btilde * r
        f = pref * Q(x)
        g = pref * P(x)
        df = logd * f + pref * Q.deriv_at(x) * s
        dg = logd * g + pref * P.deriv_at(x) * s
        return f, g, df, dg

    return evaluate


# ---------------------------------------------------------------------------
# Extended system
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExtendedQesCoefficients:
    """Row coefficients of the gauged extended system at one
    (gamma0, epsilon) point:

        row 1: (D + a2) p + (a1 r + a0) q = 0
        row 2: (D + c0 + c1 r + c2 r^2) q + (d1 r + d0) p = 0

    with D = r d/dr, for polynomials p (degree n) and q (degree n-1).
    """

    a2: float
    a1: float
    a0: float
    c0: float
    c1: float
    c2: float
    d1: float
    d0: float


@dataclass(frozen=True)
class ExtendedQesSystem:
    """Constraint system of the extended linear family off its exactly
    solvable surface.

    Fixed data: mass ``M``, angular parameter ``kappa``, 1/r coupling
    ``alpha``, linear strengths ``beta1`` and ``gamma1``, polynomial
    index ``n``.  Derived: R = sqrt(beta1^2 + gamma1^2), the gauge
    exponent theta = sqrt(kappa^2 - alpha^2), the rotation angle, and the
    Gaussian rate lambda2 = R.  The remaining free coupling is the
    constant term gamma0; for each gamma0 the solvable energies obey

        eps^2 = 2 (R (n + theta) - gamma1 kappa)
                + (M gamma1 - beta1 gamma0)^2 / R^2

    (an exact consequence of the system's product identity
    a1 d1 = c2 (n + a2)), and one further scalar condition selects the
    admissible gamma0, located by the singular-value scan in
    ``extended_solve``.
    """

    M: float
    kappa: float
    alpha: float
    beta1: float
    gamma1: float
    n: int

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValidationError("polynomial index n must be >= 0")
        if self.beta1 == 0.0:
            raise SingularConfigurationError(
                "beta1 = 0 lies on the exactly solvable surface; the "
                "constraint system degenerates (use the exact spectrum)"
            )
        if self.alpha**2 >= self.kappa**2:
            raise SupercriticalCouplingError(
                f"alpha^2 = {self.alpha ** 2:.6g} must stay below kappa^2 = "
                f"{self.kappa ** 2:.6g}"
            )

    @property
    def R(self) -> float:
        return math.hypot(self.beta1, self.gamma1)

    @property
    def theta(self) -> float:
        return math.sqrt(self.kappa**2 - self.alpha**2)

    @property
    def omega(self) -> float:
        return 0.5 * math.atan2(self.beta1 / self.R, self.gamma1 / self.R)

    @property
    def lambda2(self) -> float:
        return self.R

    def lambda1(self, gamma0: float) -> float:
        return (self.beta1 * self.M + gamma0 * self.gamma1) / self.R

    def epsilon_squared(self, gamma0: float) -> float:
        R = self.R
        return (
            2.0 * (R * (self.n + self.theta) - self.gamma1 * self.kappa)
            + (self.M * self.gamma1 - self.beta1 * gamma0) ** 2 / (R * R)
        )

    def coefficients(
        self, gamma0: float, epsilon: float
    ) -> ExtendedQesCoefficients:
        R, b1, g1 = self.R, self.beta1, self.gamma1
        kap, M, alpha = self.kappa, self.M, self.alpha
        c2 = g1 / R
        return ExtendedQesCoefficients(
            a2=self.theta - kap * c2,
            a1=(R + g1) * (epsilon * R - g1 * M + b1 * gamma0) / (b1 * R),
            a0=(R + g1) * (alpha * R - b1 * kap) / (b1 * R),
            c0=self.theta + kap * c2,
            c1=-2.0 * self.lambda1(gamma0),
            c2=-2.0 * R,
            d1=-(R - g1) * (epsilon * R + g1 * M - b1 * gamma0) / (b1 * R),
            d0=-(R - g1) * (alpha * R + b1 * kap) / (b1 * R),
        )

    def condition_residual(self, gamma0: float, epsilon: float) -> float:
        """Relative defect of the product identity
        a1 d1 = c2 (n + a2); zero exactly on the energy condition."""
        co = self.coefficients(gamma0, epsilon)
        lhs = co.a1 * co.d1
        rhs = co.c2 * (self.n + co.a2)
        scale = max(abs(lhs), abs(rhs), 1.0)
        return abs(lhs - rhs) / scale

    def matrix(self, gamma0: float, epsilon: float) -> np.ndarray:
        """Coefficient matrix; columns p_0..p_n, q_0..q_{n-1}."""
        n = self.n
        co = self.coefficients(gamma0, epsilon)
        ncols = 2 * n + 1
        rows = 2 * n + 3
        mat = np.zeros((rows, ncols))

        def pcol(d: int) -> int:
            return d

        def qcol(d: int) -> int:
            return n + 1 + d

        r = 0
        for d in range(n + 1):  # row-1 coefficients of r^d
            mat[r, pcol(d)] = d + co.a2
            if 0 <= d - 1 <= n - 1:
                mat[r, qcol(d - 1)] = co.a1
            if d <= n - 1:
                mat[r, qcol(d)] = co.a0
            r += 1
        for d in range(n + 2):  # row-2 coefficients of r^d
            if d <= n - 1:
                mat[r, qcol(d)] = d + co.c0
            if 0 <= d - 1 <= n - 1:
                mat[r, qcol(d - 1)] = co.c1
            if 0 <= d - 2 <= n - 1:
                mat[r, qcol(d - 2)] = co.c2
            if 0 <= d - 1 <= n:
                mat[r, pcol(d - 1)] = co.d1
            if d <= n:
                mat[r, pcol(d)] = co.d0
            r += 1
        return mat

    def sigma_profile(self, gamma0: float, sign: int) -> float:
        e2 = self.epsilon_squared(gamma0)
        if e2 < 0:
            return float("nan")
        eps = sign * math.sqrt(e2)
        smin, smax, _ = _smallest_singular_pair(self.matrix(gamma0, eps))
        return smin / max(smax, 1e-300)


@dataclass(frozen=True)
class ExtendedQesSolution:
    """One admissible point of the extended constraint surface."""

    gamma0: float
    sign: int
    epsilon: float
    sigma_min: float
    sigma_max: float
    p: Poly
    q: Poly
    coefficients: ExtendedQesCoefficients


def extended_build(
    M: float,
    kappa: float,
    alpha: float,
    beta1: float,
    gamma1: float,
    n: int,
) -> ExtendedQesSystem:
    return ExtendedQesSystem(
        M=float(M),
        kappa=float(kappa),
        alpha=float(alpha),
        beta1=float(beta1),
        gamma1=float(gamma1),
        n=int(n),
    )


def _extended_solution_at(
    system: ExtendedQesSystem, gamma0: float, sign: int
) -> ExtendedQesSolution:
    eps = sign * math.sqrt(system.epsilon_squared(gamma0))
    mat = system.matrix(gamma0, eps)
    smin, smax, vec = _smallest_singular_pair(mat)
    n = system.n
    p = vec[: n + 1]
    q = vec[n + 1 :]
    pivot = p[n]
    if abs(pivot) > 1e-12 * np.linalg.norm(vec):
        p = p / pivot
        q = q / pivot
    return ExtendedQesSolution(
        gamma0=gamma0,
        sign=sign,
        epsilon=eps,
        sigma_min=smin,
        sigma_max=smax,
        p=Poly(tuple(p)),
        q=Poly(tuple(q)),
        coefficients=system.coefficients(gamma0, eps),
    )


def extended_solve(
    system: ExtendedQesSystem,
    gamma0_range: tuple[float, float] = (-200.0, 200.0),
    points: int = 2001,
    signs: Sequence[int] = (-1, 1),
) -> list[ExtendedQesSolution]:
    """All constant couplings gamma0 in range where the extended system
    acquires a kernel, on each requested energy branch; sorted by
    (branch sign, gamma0).  Grid points with a negative energy square
    are skipped as infeasible.

    The default range is generous because quantized-coupling branches
    can run away: continuing a branch in an external parameter may send
    gamma0 through a vertical asymptote (the root escapes to infinity at
    an isolated parameter value and returns with the opposite energy
    sign), so roots of large magnitude are routine, not pathological."""
    lo, hi = gamma0_range
    out: list[ExtendedQesSolution] = []
    for sign in signs:
        if sign not in (-1, 1):
            raise ValidationError("energy branch sign must be -1 or +1")
        roots = _scan_roots(
            lambda g0, s=sign: system.sigma_profile(g0, s), lo, hi, points
        )
        for gamma0, _ in roots:
            out.append(_extended_solution_at(system, gamma0, sign))
    out.sort(key=lambda s: (s.sign, s.gamma0))
    return out


def extended_to_instance(
    system: ExtendedQesSystem, sol: ExtendedQesSolution
) -> tuple[ProblemInstance, float]:
    """Physical problem instance (and its bound-state energy) realizing
    an extended-system solution."""
    inst = preset(
        Preset.EXTENDED_OSCILLATOR_QES,
        {
            "M": system.M,
            "kappa": system.kappa,
            "alpha": system.alpha,
            "beta1": system.beta1,
            "gamma0": sol.gamma0,
            "gamma1": system.gamma1,
        },
    )
    return inst, sol.epsilon


def extended_physical_solution(
    system: ExtendedQesSystem, sol: ExtendedQesSolution
) -> Callable[[float], tuple[float, float, float, float]]:
    """Callable r -> (f, g, f', g') reconstructing the physical bound
    state from the polynomial pair of an extended-system solution.

    The pair (p, q) lives in the rotated gauge frame; the map back is
    the scalar prefactor r^theta exp(-lambda2 r^2/2 - lambda1 r), the
    rotation, and a constant rescaling of q by -(R + gamma1)/beta1 that
    absorbs the rotation's normalization of the second component."""
    g = GaugeTransform(
        theta_upper=system.theta,
        theta_lower=system.theta,
        lambda1=system.lambda1(sol.gamma0),
        lambda2=system.lambda2,
        omega=system.omega,
        constant_right=(
            (1.0, 0.0),
            (0.0, -(system.R + system.gamma1) / system.beta1),
        ),
    )
    return g.physical_spinor(PolySpinor(sol.p, sol.q, var="r"))


# ---------------------------------------------------------------------------
# Scalar second-order operator and generator decomposition
# ---------------------------------------------------------------------------

def sl2_generators(n: int) -> dict[str, ScalarDiffOp]:
    """First-order operators J+, J0, J- preserving polynomials of degree
    <= n (the standard spin-n/2 realization):

        J+ = x^2 d/dx - n x,   J0 = x d/dx - n/2,   J- = d/dx.
    """
    if n < 0:
        raise ValidationError("generator degree n must be >= 0")
    return {
        "J+": ScalarDiffOp.from_dict({(2, 1): 1.0, (1, 0): -float(n)}),
        "J0": ScalarDiffOp.from_dict({(1, 1): 1.0, (0, 0): -0.5 * n}),
        "J-": ScalarDiffOp.from_dict({(0, 1): 1.0}),
    }


GeneratorWord = tuple[str, ...]


def realize_generator_poly(
    poly: Mapping[GeneratorWord, float], n: int
) -> ScalarDiffOp:
    """Realize a polynomial in the generators (words are composed left to
    right, the rightmost factor acting first) as a scalar operator."""
    gens = sl2_generators(n)
    total = ScalarDiffOp()
    for word, coeff in poly.items():
        term = ScalarDiffOp.from_dict({(0, 0): 1.0})
        for name in reversed(word):
            if name not in gens:
                raise ValidationError(f"unknown generator {name!r}")
            term = gens[name].compose(term)
        total = total + term.scaled(coeff)
    return total


def t_display(
    x0: float, b: float, c: float, beta_t: float, eps_tilde: float
) -> ScalarDiffOp:
    """The scalar second-order operator associated with the planar
    family, in its commonly displayed form

        (x + x0) x d^2/dx^2 - (x + x0) x^2 d/dx + 2 beta_t (x + x0) d/dx
        + eps~ x^2 + (eps~ x0 + b - c) x + b x0.
    """
    return ScalarDiffOp.from_dict(
        {
            (2, 2): 1.0,
            (1, 2): x0,
            (3, 1): -1.0,
            (2, 1): -x0,
            (1, 1): 2.0 * beta_t,
            (0, 1): 2.0 * beta_t * x0,
            (2, 0): eps_tilde,
            (1, 0): eps_tilde * x0 + (b - c),
            (0, 0): b * x0,
        }
    )


def t_corrected(
    x0: float, b: float, c: float, beta_t: float, eps_tilde: float
) -> ScalarDiffOp:
    """The displayed operator with the first-derivative defect removed
    (an extra -x d/dx term); this is the operator that annihilates the
    planar solutions exactly."""
    return t_display(x0, b, c, beta_t, eps_tilde) - ScalarDiffOp.from_dict(
        {(1, 1): 1.0}
    )


def t_qes_parts(
    n: int, x0: float, b: float, c: float, beta_t: float
) -> tuple[dict[GeneratorWord, float], dict[GeneratorWord, float]]:
    """Generator-polynomial decomposition (T_qes, S_qes) with

        x * T_qes + S_qes  =  displayed operator at eps~ = n

    on polynomials of degree <= n; the first part is linear and the
    second quadratic in the generators."""
    tq: dict[GeneratorWord, float] = {
        ("J+",): -1.0,
        ("J0",): -x0,
        (): x0 * n / 2.0 + b - c,
    }
    sq: dict[GeneratorWord, float] = {
        ("J0", "J0"): 1.0,
        ("J0", "J-"): x0,
        ("J0",): n - 1.0 + 2.0 * beta_t,
        ("J-",): x0 * (n / 2.0 + 2.0 * beta_t),
        (): (n / 2.0) * (n / 2.0 - 1.0) + beta_t * n + b * x0,
    }
    return tq, sq


def t_roundtrip_residual(
    n: int, x0: float, b: float, c: float, beta_t: float
) -> float:
    """Max relative coefficient defect of the decomposition identity
    x * T_qes + S_qes = displayed operator at eps~ = n."""
    tq, sq = t_qes_parts(n, x0, b, c, beta_t)
    x_op = ScalarDiffOp.from_dict({(1, 0): 1.0})
    lhs = x_op.compose(realize_generator_poly(tq, n)) + realize_generator_poly(
        sq, n
    )
    rhs = t_display(x0, b, c, beta_t, float(n))
    diff = lhs - rhs
    scale = max(lhs.max_abs(), rhs.max_abs(), 1.0)
    return diff.max_abs() / scale


def planar_t_parameters(
    sol: PlanarSolution,
) -> tuple[float, float, float, float, float]:
    """Scalar-operator parameters (x0, b, c, beta_t, eps~) induced by a
    planar solution:

        x0 = alpha/(eps + M),
        b = 2 eps alpha + (kappa - gamma)(eps + M)/alpha,
        c = alpha/(eps + M) + (kappa - gamma)(eps + M)/alpha,
        beta_t = gamma + 1/2,
        eps~ = eps^2 - M^2 - kappa - gamma - 1   (= n on the surface).
    """
    alpha, eps, M = sol.alpha, sol.epsilon, sol.M
    if alpha == 0.0:
        raise DomainError("the scalar operator requires a nonzero coupling")
    if eps + M == 0.0:
        raise DomainError("eps + M = 0 makes the scalar operator singular")
    kg = (sol.kappa - sol.gamma) * (eps + M) / alpha
    x0 = alpha / (eps + M)
    b = 2.0 * eps * alpha + kg
    c = x0 + kg
    beta_t = sol.gamma + 0.5
    eps_tilde = eps * eps - M * M - sol.kappa - sol.gamma - 1.0
    return x0, b, c, beta_t, eps_tilde


def t_action_matrix(T: ScalarDiffOp, deg: int) -> np.ndarray:
    """Matrix of ``T`` on the monomial basis 1, x, ..., x^deg (columns);
    rows cover every output power.  Rank deficiency of this matrix is the
    annihilation diagnostic: a polynomial kernel exists exactly when the
    rank is below deg + 1."""
    if deg < 0:
        raise ValidationError("degree must be >= 0")
    images = [T.apply(Poly.monomial(j)) for j in range(deg + 1)]
    nrows = max((im.degree for im in images), default=-1) + 1
    nrows = max(nrows, 1)
    mat = np.zeros((nrows, deg + 1))
    for j, im in enumerate(images):
        for k, cc in enumerate(im.coeffs):
            mat[k, j] = cc
    return mat

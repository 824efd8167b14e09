"""Independent shooting-method oracle for the radial first-order system.

Solves the coupled system

    f'(r) =  p(r) f(r) - a(r) g(r)
    g'(r) = -b(r) f(r) - p(r) g(r)

with ``p = kappa/r + mu_n E``, ``a = M - eps - V + W``,
``b = M + eps + V + W`` (the kernel condition of the physical operator),
by integrating outward from a Frobenius series at ``r_min`` and inward
from the locally decaying direction at ``r_max``, and measuring the
Wronskian mismatch of the two halves at a matching radius.  Bound-state
energies are roots of the mismatch.

Everything here is deliberately independent of the polynomial-algebra
modules: a hand-rolled adaptive Dormand-Prince 5(4) integrator over plain
floats, series coefficients from the raw recursion, and root finding by
bisection-safe Brent iteration.  Agreement with the algebraic solvers is
therefore a genuine cross-check, not a tautology.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from scipy.optimize import brentq

from .errors import (
    ConvergenceError,
    DomainError,
    NoRootInBracketError,
    SupercriticalCouplingError,
    ValidationError,
)
from .model import ProblemInstance

__all__ = [
    "ShootingConfig",
    "ShootingResult",
    "indicial_exponent",
    "series_start",
    "inward_start",
    "auto_r_max",
    "integrate",
    "find_eigenvalue",
]


@dataclass(frozen=True)
class ShootingConfig:
    """Tuning knobs for the shooting integration.

    ``steps`` is a nominal resolution across the integration span; the
    adaptive integrator converts it into a relative tolerance of order
    ``(span/steps)**4`` so doubling ``steps`` tightens the local error by
    roughly a factor of 16.  ``r_max`` and ``match_point`` default to an
    automatic choice: the radius where the accumulated decay exponent in
    the classically forbidden region reaches ~45, and the geometric mean
    of ``r_min`` and ``r_max``.
    """

    r_min: float = 1e-6
    r_max: float | None = None
    steps: int = 20000
    match_point: float | None = None
    tol_energy: float = 1e-10
    max_series_terms: int = 60
    series_tol: float = 1e-20

    def __post_init__(self) -> None:
        if self.r_min <= 0:
            raise ValidationError("r_min must be positive")
        if self.r_max is not None and self.r_max <= self.r_min:
            raise ValidationError("r_max must exceed r_min")
        if self.steps < 10:
            raise ValidationError("steps must be at least 10")
        if self.tol_energy <= 0:
            raise ValidationError("tol_energy must be positive")

    def rtol(self, span: float) -> float:
        return min(max((span / self.steps) ** 4, 1e-13), 1e-7)


@dataclass(frozen=True)
class ShootingResult:
    """Outcome of one shooting evaluation or eigenvalue search."""

    epsilon: float
    miss: float
    normalizable: bool
    r_max: float
    match_point: float
    nodes: int | None = None


# ---------------------------------------------------------------------------
# Coefficient functions
# ---------------------------------------------------------------------------

def _coefficients(
    inst: ProblemInstance, epsilon: float
) -> Callable[[float], tuple[float, float, float]]:
    """Return r -> (p, a, b) using plain-float Horner evaluation."""
    par, pot = inst.params, inst.potentials
    kappa, mu = par.kappa, par.mu_n
    M = par.M
    alpha, beta = pot.alpha, pot.beta
    apoly, bpoly, gpoly = pot.alpha_poly, pot.beta_poly, pot.gamma_poly

    def coeff(r: float) -> tuple[float, float, float]:
        vpoly = 0.0
        for c in reversed(apoly):
            vpoly = vpoly * r + c
        wpoly = 0.0
        for c in reversed(bpoly):
            wpoly = wpoly * r + c
        ev = 0.0
        for c in reversed(gpoly):
            ev = ev * r + c
        V = alpha / r + vpoly * r
        W = beta / r + wpoly * r
        p = kappa / r + mu * ev
        a = M - epsilon - V + W
        b = M + epsilon + V + W
        return p, a, b

    return coeff


def indicial_exponent(inst: ProblemInstance) -> float:
    """Non-negative indicial exponent theta0 = sqrt(kappa^2 + beta^2 - alpha^2)
    of the power-law-regular solution at the origin.

    The critical boundary theta0 = 0 is admitted: the indicial matrix
    degenerates to a nilpotent block there, but the log-free solution
    survives and the series recursion stays regular (its step determinant
    j(j + 2*theta0) never vanishes for j >= 1).  Raises
    ``SupercriticalCouplingError`` when the exponents are complex
    (oscillatory collapse onto the origin, no bound-state problem)."""
    par, pot = inst.params, inst.potentials
    t2 = par.kappa**2 + pot.beta**2 - pot.alpha**2
    scale = max(1.0, par.kappa**2 + pot.beta**2 + pot.alpha**2)
    if t2 < -1e-12 * scale:
        raise SupercriticalCouplingError(
            "indicial exponents are complex: "
            f"kappa^2 + beta^2 - alpha^2 = {t2:.6g} < 0"
        )
    return math.sqrt(max(t2, 0.0))


# ---------------------------------------------------------------------------
# Series start at the origin
# ---------------------------------------------------------------------------

def _series_matrices(
    inst: ProblemInstance, epsilon: float
) -> list[tuple[tuple[float, float], tuple[float, float]]]:
    """Matrices N_m of the expansion r*A(r) = sum_m N_m r^m for the system
    y' = A(r) y."""
    par, pot = inst.params, inst.potentials
    kappa, mu, M = par.kappa, par.mu_n, par.M
    alpha, beta = pot.alpha, pot.beta
    s_off = max(len(pot.alpha_poly), len(pot.beta_poly))
    mmax = max(1 + len(pot.gamma_poly) - 1 if pot.gamma_poly else 0,
               1 + s_off, 1)
    N = [[[0.0, 0.0], [0.0, 0.0]] for _ in range(mmax + 1)]
    N[0][0][0] = kappa
    N[0][0][1] = alpha - beta
    N[0][1][0] = -(alpha + beta)
    N[0][1][1] = -kappa
    N[1][0][1] += -(M - epsilon)
    N[1][1][0] += -(M + epsilon)
    for i, g in enumerate(pot.gamma_poly):
        N[i + 1][0][0] += mu * g
        N[i + 1][1][1] += -mu * g
    for i in range(s_off):
        av = pot.alpha_poly[i] if i < len(pot.alpha_poly) else 0.0
        bv = pot.beta_poly[i] if i < len(pot.beta_poly) else 0.0
        N[i + 1][0][1] += av - bv
        N[i + 1][1][0] += -(av + bv)
    return [((m[0][0], m[0][1]), (m[1][0], m[1][1])) for m in N]


def series_start(
    inst: ProblemInstance,
    epsilon: float,
    r0: float,
    max_terms: int = 60,
    tol: float = 1e-20,
) -> tuple[float, float]:
    """Value at r0 of the regular Frobenius solution, with the overall
    r0**theta0 scale factor dropped (the system is linear, so only the
    direction matters).  Returns a unit vector (f, g)."""
    theta0 = indicial_exponent(inst)
    N = _series_matrices(inst, epsilon)
    par, pot = inst.params, inst.potentials
    kappa = par.kappa
    ab_minus = pot.alpha - pot.beta
    ab_plus = pot.alpha + pot.beta
    # eigenvector of N[0] for +theta0; two row formulas, pick the larger
    cand1 = (ab_minus, theta0 - kappa)
    cand2 = (theta0 + kappa, -ab_plus)
    v0 = cand1 if math.hypot(*cand1) >= math.hypot(*cand2) else cand2
    nrm = math.hypot(*v0)
    v0 = (v0[0] / nrm, v0[1] / nrm)

    vs = [v0]
    total = [v0[0], v0[1]]
    rpow = 1.0
    for j in range(1, max_terms + 1):
        rpow *= r0
        rhs = [0.0, 0.0]
        for i in range(1, min(j, len(N) - 1) + 1):
            w = vs[j - i]
            rhs[0] += N[i][0][0] * w[0] + N[i][0][1] * w[1]
            rhs[1] += N[i][1][0] * w[0] + N[i][1][1] * w[1]
        # solve [(theta0+j) I - N0] v = rhs; its determinant is j(j+2theta0)
        m00 = theta0 + j - kappa
        m01 = -ab_minus
        m10 = ab_plus
        m11 = theta0 + j + kappa
        det = j * (j + 2.0 * theta0)
        vj = (
            (m11 * rhs[0] - m01 * rhs[1]) / det,
            (-m10 * rhs[0] + m00 * rhs[1]) / det,
        )
        vs.append(vj)
        total[0] += vj[0] * rpow
        total[1] += vj[1] * rpow
        if math.hypot(vj[0] * rpow, vj[1] * rpow) <= tol * math.hypot(*total):
            break
    nrm = math.hypot(*total)
    if nrm == 0.0:
        raise ConvergenceError("series start vanished identically")
    return total[0] / nrm, total[1] / nrm


# ---------------------------------------------------------------------------
# Decaying start at large radius
# ---------------------------------------------------------------------------

def _inward_candidates(
    p: float, a: float, b: float
) -> tuple[tuple[float, float], tuple[float, float], float]:
    q = p * p + a * b
    if q <= 0.0:
        raise DomainError(
            "no decaying direction: p^2 + a*b = "
            f"{q:.6g} <= 0 at the outer radius (not classically forbidden)"
        )
    lam = -math.sqrt(q)
    return (a, p - lam), (p + lam, -b), lam


def inward_start(
    inst: ProblemInstance,
    epsilon: float,
    r: float,
    formula: int | None = None,
) -> tuple[float, float]:
    """Unit vector along the locally decaying mode of the system at radius
    r.  ``formula`` pins one of the two algebraically equivalent eigenvector
    expressions (0 or 1); fixing it across an energy bracket keeps the
    mismatch function continuous."""
    p, a, b = _coefficients(inst, epsilon)(r)
    cand1, cand2, _ = _inward_candidates(p, a, b)
    if formula is None:
        formula = 0 if math.hypot(*cand1) >= math.hypot(*cand2) else 1
    v = cand1 if formula == 0 else cand2
    nrm = math.hypot(*v)
    if nrm == 0.0:
        raise ConvergenceError("degenerate decaying direction")
    return v[0] / nrm, v[1] / nrm


def _select_inward_formula(inst: ProblemInstance, epsilon: float, r: float) -> int:
    p, a, b = _coefficients(inst, epsilon)(r)
    cand1, cand2, _ = _inward_candidates(p, a, b)
    return 0 if math.hypot(*cand1) >= math.hypot(*cand2) else 1


# ---------------------------------------------------------------------------
# Automatic outer radius
# ---------------------------------------------------------------------------

def auto_r_max(inst: ProblemInstance, epsilon: float, r_min: float) -> float:
    """Radius where the decay exponent integral over the outermost
    classically forbidden region reaches ~45 (so the decaying mode has
    shrunk by ~e^-45 there), clipped to [10, 120].

    The result always lies beyond the outermost classical turning point
    found: a state bound so shallowly that its forbidden region only
    begins past 120 stretches the cap instead of being cut off inside
    the oscillatory region, where no decaying start direction exists."""
    coeff = _coefficients(inst, epsilon)
    lo = max(r_min, 1e-3)
    hi = 600.0
    n = 12000
    dr = (hi - lo) / n
    acc = 0.0
    r = lo
    r_turn = lo
    reached = None
    for _ in range(n):
        r += dr
        p, a, b = coeff(r)
        q = p * p + a * b
        if q <= 0.0:
            acc = 0.0
            r_turn = r
            continue
        acc += math.sqrt(q) * dr
        if acc >= 45.0:
            reached = r
            break
    cap = max(120.0, 1.25 * r_turn + 10.0)
    if reached is None:
        return cap
    return min(max(reached, 10.0), cap)


# ---------------------------------------------------------------------------
# Dormand-Prince 5(4) adaptive integration
# ---------------------------------------------------------------------------

_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = (
    9017 / 3168,
    -355 / 33,
    46732 / 5247,
    49 / 176,
    -5103 / 18656,
)
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71 / 57600,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9


def _integrate_span(
    fun: Callable[[float, float, float], tuple[float, float]],
    r0: float,
    r1: float,
    y0: tuple[float, float],
    rtol: float,
    collect: list[tuple[float, float, float]] | None = None,
) -> tuple[float, float]:
    """Integrate y' = fun(r, f, g) from r0 to r1 (either direction),
    renormalizing to unit length after each accepted step (the system is
    linear and homogeneous, so the direction is all that matters).
    Returns the unit vector at r1; if ``collect`` is a list, accepted-step
    unit samples (r, f, g) are appended to it."""
    span = r1 - r0
    dirn = 1.0 if span > 0 else -1.0
    r = r0
    f, g = y0
    nrm = math.hypot(f, g)
    f, g = f / nrm, g / nrm
    if collect is not None:
        collect.append((r, f, g))
    k1 = fun(r, f, g)
    h = dirn * abs(span) / 1000.0
    hmin = abs(span) * 1e-13
    max_steps = 400000
    steps = 0
    while (r1 - r) * dirn > 0.0:
        steps += 1
        if steps > max_steps:
            raise ConvergenceError(
                f"integrator exceeded {max_steps} steps at r = {r:.6g}"
            )
        if (r + h - r1) * dirn > 0.0:
            h = r1 - r
        k2 = fun(r + _C2 * h, f + h * _A21 * k1[0], g + h * _A21 * k1[1])
        k3 = fun(
            r + _C3 * h,
            f + h * (_A31 * k1[0] + _A32 * k2[0]),
            g + h * (_A31 * k1[1] + _A32 * k2[1]),
        )
        k4 = fun(
            r + _C4 * h,
            f + h * (_A41 * k1[0] + _A42 * k2[0] + _A43 * k3[0]),
            g + h * (_A41 * k1[1] + _A42 * k2[1] + _A43 * k3[1]),
        )
        k5 = fun(
            r + _C5 * h,
            f + h * (_A51 * k1[0] + _A52 * k2[0] + _A53 * k3[0] + _A54 * k4[0]),
            g + h * (_A51 * k1[1] + _A52 * k2[1] + _A53 * k3[1] + _A54 * k4[1]),
        )
        k6 = fun(
            r + h,
            f
            + h
            * (_A61 * k1[0] + _A62 * k2[0] + _A63 * k3[0] + _A64 * k4[0] + _A65 * k5[0]),
            g
            + h
            * (_A61 * k1[1] + _A62 * k2[1] + _A63 * k3[1] + _A64 * k4[1] + _A65 * k5[1]),
        )
        fn = f + h * (_B1 * k1[0] + _B3 * k3[0] + _B4 * k4[0] + _B5 * k5[0] + _B6 * k6[0])
        gn = g + h * (_B1 * k1[1] + _B3 * k3[1] + _B4 * k4[1] + _B5 * k5[1] + _B6 * k6[1])
        k7 = fun(r + h, fn, gn)
        ef = h * (
            _E1 * k1[0] + _E3 * k3[0] + _E4 * k4[0] + _E5 * k5[0] + _E6 * k6[0] + _E7 * k7[0]
        )
        eg = h * (
            _E1 * k1[1] + _E3 * k3[1] + _E4 * k4[1] + _E5 * k5[1] + _E6 * k6[1] + _E7 * k7[1]
        )
        ynorm = math.hypot(fn, gn)
        err = math.hypot(ef, eg) / max(ynorm, 1e-300)
        if err <= rtol or abs(h) <= hmin:
            r += h
            f, g = fn / ynorm, gn / ynorm
            k1 = (k7[0] / ynorm, k7[1] / ynorm)
            if collect is not None:
                collect.append((r, f, g))
        if err > 0.0:
            factor = 0.9 * (rtol / err) ** 0.2
            h *= min(max(factor, 0.2), 5.0)
        else:
            h *= 5.0
        if abs(h) < hmin:
            h = hmin * dirn
    return f, g


# ---------------------------------------------------------------------------
# Mismatch and eigenvalue search
# ---------------------------------------------------------------------------

def _resolve(
    inst: ProblemInstance, epsilon: float, config: ShootingConfig
) -> tuple[float, float]:
    r_max = config.r_max
    if r_max is None:
        r_max = auto_r_max(inst, epsilon, config.r_min)
    match = config.match_point
    if match is None:
        match = math.sqrt(config.r_min * r_max)
    if not (config.r_min < match < r_max):
        raise ValidationError(
            f"match point {match} outside ({config.r_min}, {r_max})"
        )
    return r_max, match


def _miss_at(
    inst: ProblemInstance,
    epsilon: float,
    config: ShootingConfig,
    r_max: float,
    match: float,
    formula: int | None,
    collect: bool = False,
) -> tuple[float, list[tuple[float, float, float]], list[tuple[float, float, float]]]:
    coeff = _coefficients(inst, epsilon)

    def fun(r: float, f: float, g: float) -> tuple[float, float]:
        p, a, b = coeff(r)
        return p * f - a * g, -b * f - p * g

    rtol = config.rtol(r_max - config.r_min)
    y_out0 = series_start(
        inst, epsilon, config.r_min, config.max_series_terms, config.series_tol
    )
    y_in0 = inward_start(inst, epsilon, r_max, formula)
    out_samples: list[tuple[float, float, float]] | None = [] if collect else None
    in_samples: list[tuple[float, float, float]] | None = [] if collect else None
    f_out, g_out = _integrate_span(
        fun, config.r_min, match, y_out0, rtol, out_samples
    )
    f_in, g_in = _integrate_span(fun, r_max, match, y_in0, rtol, in_samples)
    miss = f_out * g_in - g_out * f_in
    return miss, out_samples or [], in_samples or []


def _count_nodes(
    out_samples: list[tuple[float, float, float]],
    in_samples: list[tuple[float, float, float]],
) -> int:
    """Sign changes of the upper component across the glued solution.

    The inward half is rescaled so the dominant component is continuous at
    the matching point; each sample is already unit length, so a deadband
    of 1e-12 suppresses noise crossings."""
    if not out_samples or not in_samples:
        return 0
    _, fo, go = out_samples[-1]
    _, fi, gi = in_samples[-1]
    c = fo / fi if abs(fi) >= abs(gi) else go / gi
    glued = [s[1] for s in out_samples]
    glued.extend(c * s[1] for s in reversed(in_samples))
    nodes = 0
    last_sign = 0
    for fv in glued:
        if abs(fv) <= 1e-12:
            continue
        sign = 1 if fv > 0 else -1
        if last_sign and sign != last_sign:
            nodes += 1
        last_sign = sign
    return nodes


def integrate(
    inst: ProblemInstance,
    epsilon: float,
    config: ShootingConfig | None = None,
    count_nodes: bool = False,
) -> ShootingResult:
    """Shoot at a single energy and report the mismatch.

    ``normalizable`` is True when the mismatch is below 1e-8 (the two
    halves join into one solution) and the regular indicial exponent
    exceeds -1/2 (square-integrability at the origin)."""
    config = config or ShootingConfig()
    r_max, match = _resolve(inst, epsilon, config)
    theta0 = indicial_exponent(inst)
    miss, outs, ins = _miss_at(
        inst, epsilon, config, r_max, match, formula=None, collect=count_nodes
    )
    nodes = _count_nodes(outs, ins) if count_nodes else None
    return ShootingResult(
        epsilon=epsilon,
        miss=miss,
        normalizable=(abs(miss) < 1e-8 and theta0 > -0.5),
        r_max=r_max,
        match_point=match,
        nodes=nodes,
    )


def find_eigenvalue(
    inst: ProblemInstance,
    bracket: tuple[float, float],
    config: ShootingConfig | None = None,
) -> ShootingResult:
    """Locate a bound-state energy inside ``bracket`` by driving the
    shooting mismatch to zero.

    Raises ``NoRootInBracketError`` if the mismatch does not change sign
    over the bracket, and ``ConvergenceError`` if the root iteration fails
    to settle within ``tol_energy``."""
    config = config or ShootingConfig()
    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise ValidationError(f"empty energy bracket ({lo}, {hi})")
    mid = 0.5 * (lo + hi)
    r_max, match = _resolve(inst, mid, config)
    if config.r_max is None:
        # the domain must be classically forbidden at its outer edge for
        # every energy probed, so size it for both bracket endpoints too
        r_max = max(r_max,
                    auto_r_max(inst, lo, config.r_min),
                    auto_r_max(inst, hi, config.r_min))
        if config.match_point is None:
            match = math.sqrt(config.r_min * r_max)
    formula = _select_inward_formula(inst, mid, r_max)

    def miss_fn(eps: float) -> float:
        m, _, _ = _miss_at(inst, eps, config, r_max, match, formula)
        return m

    m_lo = miss_fn(lo)
    m_hi = miss_fn(hi)
    if m_lo == 0.0:
        root = lo
    elif m_hi == 0.0:
        root = hi
    elif (m_lo > 0) == (m_hi > 0):
        raise NoRootInBracketError(
            f"mismatch has the same sign at both ends of ({lo:.12g}, {hi:.12g}): "
            f"{m_lo:.3e} and {m_hi:.3e}"
        )
    else:
        try:
            root = brentq(
                miss_fn, lo, hi, xtol=config.tol_energy, rtol=8.9e-16, maxiter=300
            )
        except (RuntimeError, ValueError) as exc:
            raise ConvergenceError(
                f"root iteration failed on ({lo:.12g}, {hi:.12g}): {exc}"
            ) from exc
    miss, outs, ins = _miss_at(
        inst, root, config, r_max, match, formula, collect=True
    )
    # The root is accurate to tol_energy; with a steep mismatch slope the
    # residual at the root can exceed a flat threshold even for a genuine
    # crossing, so normalizability is judged against slope * tol_energy.
    delta = max(config.tol_energy, 1e-12) * 8.0
    m_plus = miss_fn(root + delta)
    m_minus = miss_fn(root - delta)
    slope = abs(m_plus - m_minus) / (2.0 * delta)
    residual_floor = max(1e-8, 4.0 * slope * config.tol_energy)
    theta0 = indicial_exponent(inst)
    return ShootingResult(
        epsilon=float(root),
        miss=miss,
        normalizable=(abs(miss) < residual_floor and theta0 > -0.5),
        r_max=r_max,
        match_point=match,
        nodes=_count_nodes(outs, ins),
    )

"""Problem family shared by every solver in the package.

The physical problem is the kernel of the 2x2 first-order radial operator

    H = d/dr * I  +  [ -kappa/r + mu_n*(B - E)     M - eps - V + W ]
                     [  M + eps + V + W            kappa/r + mu_n*(B + E) ]

acting on a two-component radial spinor (f, g), with B(r) identically zero.
Equivalently, solutions satisfy the first-order system

    f' = p(r) f - a(r) g,      g' = -b(r) f - p(r) g,

with p = kappa/r + mu_n*E,  a = M - eps - V + W,  b = M + eps + V + W.

The potentials are restricted to the radial family

    V(r) = alpha/r + sum_{i=1..s} alpha_i r**i
    W(r) = beta /r + sum_{i=1..s} beta_i  r**i
    E(r) =           sum_{i=0..s} gamma_i r**i

Note the offset: the polynomial parts of V and W start at r**1 while E
starts at r**0.

All types here are immutable values and safe to share between workers.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

from .errors import ConfigurationError, ValidationError

__all__ = [
    "Geometry",
    "PhysicalParams",
    "PotentialSpec",
    "ProblemInstance",
    "Preset",
    "preset",
    "to_json_dict",
    "from_json_dict",
    "dumps_instance",
    "loads_instance",
    "save_instance",
    "load_instance",
]

_HALF_INT_TOL = 1e-9


class Geometry(enum.Enum):
    """Spatial setting of the radial reduction."""

    THREE_D = "3d"
    PLANAR = "planar"


def _as_float_tuple(xs: Sequence[float]) -> tuple[float, ...]:
    return tuple(float(x) for x in xs)


@dataclass(frozen=True)
class PhysicalParams:
    """Mass, angular-momentum label, anomalous-moment coupling, energy.

    ``epsilon`` is the energy parameter; it is ``None`` for eigenproblems
    where the energy is the unknown.
    """

    M: float
    kappa: float
    mu_n: float = 0.0
    epsilon: float | None = None

    def __post_init__(self) -> None:
        if self.kappa == 0:
            raise ValidationError("kappa must be nonzero")

    def with_epsilon(self, epsilon: float) -> "PhysicalParams":
        return replace(self, epsilon=float(epsilon))


@dataclass(frozen=True)
class PotentialSpec:
    """Coefficients of the four radial potentials.

    ``alpha_poly[i]`` multiplies r**(i+1) in V, ``beta_poly[i]``
    multiplies r**(i+1) in W, and ``gamma_poly[i]`` multiplies r**i in E.
    The magnetic potential B(r) is identically zero throughout the
    package and is not represented.
    """

    alpha: float = 0.0
    beta: float = 0.0
    alpha_poly: tuple[float, ...] = ()
    beta_poly: tuple[float, ...] = ()
    gamma_poly: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "alpha_poly", _as_float_tuple(self.alpha_poly))
        object.__setattr__(self, "beta_poly", _as_float_tuple(self.beta_poly))
        object.__setattr__(self, "gamma_poly", _as_float_tuple(self.gamma_poly))

    @property
    def s(self) -> int:
        """Maximum polynomial degree appearing in any of V, W, E.

        Derived from the stored lists, so it is consistent with them by
        construction.
        """
        return max(
            len(self.alpha_poly),
            len(self.beta_poly),
            len(self.gamma_poly) - 1,
            0,
        )

    def V(self, r: float) -> float:
        v = self.alpha / r if self.alpha else 0.0
        rp = 1.0
        for c in self.alpha_poly:
            rp *= r
            v += c * rp
        return v

    def W(self, r: float) -> float:
        w = self.beta / r if self.beta else 0.0
        rp = 1.0
        for c in self.beta_poly:
            rp *= r
            w += c * rp
        return w

    def E(self, r: float) -> float:
        e = 0.0
        rp = 1.0
        for i, c in enumerate(self.gamma_poly):
            if i:
                rp *= r
            e += c * rp
        return e


def _check_kappa_parity(kappa: float, geometry: Geometry) -> None:
    two_kappa = 2.0 * kappa
    nearest = round(two_kappa)
    if abs(two_kappa - nearest) > _HALF_INT_TOL or nearest == 0:
        raise ValidationError(
            f"kappa = {kappa!r} is not a nonzero (half-)integer"
        )
    if geometry is Geometry.THREE_D and nearest % 2 != 0:
        raise ValidationError(
            f"3d geometry requires integer kappa, got {kappa!r}"
        )
    if geometry is Geometry.PLANAR and nearest % 2 == 0:
        raise ValidationError(
            f"planar geometry requires half-odd-integer kappa, got {kappa!r}"
        )


@dataclass(frozen=True)
class ProblemInstance:
    """A fully specified radial problem: parameters + potentials + geometry."""

    params: PhysicalParams
    potentials: PotentialSpec
    geometry: Geometry = Geometry.THREE_D

    def __post_init__(self) -> None:
        _check_kappa_parity(self.params.kappa, self.geometry)

    def with_epsilon(self, epsilon: float) -> "ProblemInstance":
        return replace(self, params=self.params.with_epsilon(epsilon))


class Preset(enum.Enum):
    DIRAC_OSCILLATOR = "DiracOscillator"
    EXTENDED_OSCILLATOR_ES = "ExtendedOscillatorES"
    DIRAC_COULOMB = "DiracCoulomb"
    PLANAR_COULOMB_MAGNETIC = "PlanarCoulombMagnetic"
    EXTENDED_OSCILLATOR_QES = "ExtendedOscillatorQES"


_PRESET_PARAMS: dict[Preset, tuple[str, ...]] = {
    Preset.DIRAC_OSCILLATOR: ("M", "kappa", "mu_n"),
    Preset.EXTENDED_OSCILLATOR_ES: ("M", "kappa", "beta1", "gamma1"),
    Preset.DIRAC_COULOMB: ("M", "kappa", "alpha", "beta"),
    Preset.PLANAR_COULOMB_MAGNETIC: ("M", "kappa", "alpha", "Btilde"),
    Preset.EXTENDED_OSCILLATOR_QES: ("M", "kappa", "alpha", "beta1", "gamma1", "gamma0"),
}


def preset(name: Preset | str, params: Mapping[str, float]) -> ProblemInstance:
    """Construct a named problem instance from its defining parameters.

    The supported presets and their required parameter sets:

    - ``DiracOscillator`` (M, kappa, mu_n): V = W = 0, E(r) = -r.
    - ``ExtendedOscillatorES`` (M, kappa, beta1, gamma1): W = beta/r + beta1*r,
      E = gamma0 + gamma1*r with the 1/r strength and the constant term
      forced to the values that make the problem exactly solvable:
      beta = -kappa*(beta1/gamma1), gamma0 = -M*(beta1/gamma1).  The
      E-coupling for this family enters with the opposite sign, stored as
      mu_n = -1.
    - ``DiracCoulomb`` (M, kappa, alpha, beta): only the 1/r strengths of
      V and W are nonzero; E = 0.
    - ``PlanarCoulombMagnetic`` (M, kappa, alpha, Btilde): planar geometry,
      V = alpha/r, E(r) = (Btilde/2) r where Btilde is the product of the
      charge and the field strength (they only ever enter combined).
    - ``ExtendedOscillatorQES`` (M, kappa, alpha, beta1, gamma1, gamma0):
      V = alpha/r, W = beta1*r, E = gamma0 + gamma1*r, mu_n = -1.

    Raises ``ConfigurationError`` naming any missing or unknown parameter,
    and ``ValidationError`` if kappa does not match the geometry.
    """
    if isinstance(name, str):
        try:
            name = Preset(name)
        except ValueError:
            known = ", ".join(p.value for p in Preset)
            raise ConfigurationError(
                f"unknown preset {name!r}; known presets: {known}"
            ) from None

    required = _PRESET_PARAMS[name]
    missing = [k for k in required if k not in params]
    if missing:
        raise ConfigurationError(
            f"preset {name.value} is missing parameter(s): {', '.join(missing)}"
        )
    extra = [k for k in params if k not in required]
    if extra:
        raise ConfigurationError(
            f"preset {name.value} got unexpected parameter(s): {', '.join(sorted(extra))}"
        )
    p = {k: float(params[k]) for k in required}

    if name is Preset.DIRAC_OSCILLATOR:
        return ProblemInstance(
            params=PhysicalParams(M=p["M"], kappa=p["kappa"], mu_n=p["mu_n"]),
            potentials=PotentialSpec(gamma_poly=(0.0, -1.0)),
            geometry=Geometry.THREE_D,
        )
    if name is Preset.EXTENDED_OSCILLATOR_ES:
        if p["gamma1"] == 0.0:
            raise ConfigurationError(
                "preset ExtendedOscillatorES requires gamma1 != 0 "
                "(the forced couplings divide by gamma1)"
            )
        t = p["beta1"] / p["gamma1"]  # tan(2*omega)
        return ProblemInstance(
            params=PhysicalParams(M=p["M"], kappa=p["kappa"], mu_n=-1.0),
            potentials=PotentialSpec(
                beta=-p["kappa"] * t,
                beta_poly=(p["beta1"],),
                gamma_poly=(-p["M"] * t, p["gamma1"]),
            ),
            geometry=Geometry.THREE_D,
        )
    if name is Preset.DIRAC_COULOMB:
        return ProblemInstance(
            params=PhysicalParams(M=p["M"], kappa=p["kappa"], mu_n=0.0),
            potentials=PotentialSpec(alpha=p["alpha"], beta=p["beta"]),
            geometry=Geometry.THREE_D,
        )
    if name is Preset.PLANAR_COULOMB_MAGNETIC:
        return ProblemInstance(
            params=PhysicalParams(M=p["M"], kappa=p["kappa"], mu_n=1.0),
            potentials=PotentialSpec(
                alpha=p["alpha"],
                gamma_poly=(0.0, p["Btilde"] / 2.0),
            ),
            geometry=Geometry.PLANAR,
        )
    if name is Preset.EXTENDED_OSCILLATOR_QES:
        return ProblemInstance(
            params=PhysicalParams(M=p["M"], kappa=p["kappa"], mu_n=-1.0),
            potentials=PotentialSpec(
                alpha=p["alpha"],
                beta_poly=(p["beta1"],),
                gamma_poly=(p["gamma0"], p["gamma1"]),
            ),
            geometry=Geometry.THREE_D,
        )
    raise AssertionError(f"unhandled preset {name}")


# ---------------------------------------------------------------------------
# Serialization.  The JSON schema is part of the external interface:
# keys are exactly geometry, M, kappa, mu_n, alpha, beta, alpha_poly,
# beta_poly, gamma_poly; numbers are IEEE doubles in decimal text.
# ---------------------------------------------------------------------------

_GEOMETRY_TO_JSON = {Geometry.THREE_D: "3d", Geometry.PLANAR: "planar"}
_GEOMETRY_FROM_JSON = {v: k for k, v in _GEOMETRY_TO_JSON.items()}


def to_json_dict(inst: ProblemInstance) -> dict:
    return {
        "geometry": _GEOMETRY_TO_JSON[inst.geometry],
        "M": inst.params.M,
        "kappa": inst.params.kappa,
        "mu_n": inst.params.mu_n,
        "alpha": inst.potentials.alpha,
        "beta": inst.potentials.beta,
        "alpha_poly": list(inst.potentials.alpha_poly),
        "beta_poly": list(inst.potentials.beta_poly),
        "gamma_poly": list(inst.potentials.gamma_poly),
    }


def from_json_dict(d: Mapping) -> ProblemInstance:
    required = {
        "geometry", "M", "kappa", "mu_n", "alpha", "beta",
        "alpha_poly", "beta_poly", "gamma_poly",
    }
    missing = required - set(d)
    if missing:
        raise ConfigurationError(
            f"instance document is missing key(s): {', '.join(sorted(missing))}"
        )
    geometry = _GEOMETRY_FROM_JSON.get(d["geometry"])
    if geometry is None:
        raise ConfigurationError(f"unknown geometry {d['geometry']!r}")
    return ProblemInstance(
        params=PhysicalParams(
            M=float(d["M"]), kappa=float(d["kappa"]), mu_n=float(d["mu_n"])
        ),
        potentials=PotentialSpec(
            alpha=float(d["alpha"]),
            beta=float(d["beta"]),
            alpha_poly=_as_float_tuple(d["alpha_poly"]),
            beta_poly=_as_float_tuple(d["beta_poly"]),
            gamma_poly=_as_float_tuple(d["gamma_poly"]),
        ),
        geometry=geometry,
    )


def dumps_instance(inst: ProblemInstance) -> str:
    return json.dumps(to_json_dict(inst), indent=2) + "\n"


def loads_instance(text: str) -> ProblemInstance:
    return from_json_dict(json.loads(text))


def save_instance(inst: ProblemInstance, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_instance(inst))


def load_instance(path: str) -> ProblemInstance:
    with open(path, "r", encoding="utf-8") as fh:
        return loads_instance(fh.read())

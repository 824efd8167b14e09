"""Command-line front end for the radial Dirac solver.

Subcommands
-----------

``spectrum``
    Exact bound-state ladder of one of the solvable families
    (``oscillator``, ``extended-oscillator``, ``coulomb``), each level
    cross-checked against the independent shooting integrator.
``qes-scan``
    Parameter sweep of a quasi-exactly-solvable constraint system
    (``planar`` sweeps M, ``extended`` sweeps alpha), one output row per
    accepted root per sweep point, with branch identifiers that stay
    stable under continuation in the sweep parameter.
``verify``
    Per-energy shooting confirmation table for algebraically computed
    energies (``--from-algebra``) or an explicit ``--epsilon`` list;
    exits 0 only if every energy is confirmed within ``--tol``.
``preset-dump``
    JSON problem description of a named preset.

Exit codes: 0 success, 1 usage/configuration error, 2 verification
failure, 3 numerical failure.

Output is bit-stable across runs with identical inputs: floats carry 17
significant digits, lines end in LF, and scan rows are ordered by sweep
value regardless of worker completion order.  Every command accepts
``--json`` for machine-readable output with the same numeric content
(JSON objects keyed by the CSV column names).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

from .errors import (
    ConfigurationError,
    DiracQesError,
    DomainError,
    NoAlgebraicSolutionError,
    NoRootInBracketError,
    SingularConfigurationError,
    ValidationError,
)
from .exact import (
    ExactSpectrumResult,
    coulomb_spectrum,
    extended_oscillator_spectrum,
    oscillator_spectrum,
)
from .model import (
    Preset,
    ProblemInstance,
    dumps_instance,
    load_instance,
    preset,
)
from .odeoracle import ShootingConfig, ShootingResult, find_eigenvalue
from .qes import (
    extended_build,
    extended_solve,
    extended_to_instance,
    planar_build,
    planar_n0_closed_form,
    planar_solve,
    planar_to_instance,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFY = 2
EXIT_NUMERICAL = 3

# Nominal integrator resolution for command-line confirmations: accurate
# to well below the default 1e-6 tolerance at ~0.1 s per energy.
_ORACLE_STEPS = 2000


class UsageError(DiracQesError):
    """Bad flags or flag combinations (exit code 1)."""


# ---------------------------------------------------------------------------
# Output formatting
# ---------------------------------------------------------------------------

def _fmt(value: object) -> str:
    """One CSV cell.  Floats are printed with 17 significant digits so the
    text round-trips the IEEE double exactly and output is bit-stable."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return f"{value:.17g}"
    return str(value)


def _json_cell(value: object) -> object:
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


def _emit(args: argparse.Namespace, columns: Sequence[str],
          rows: Sequence[dict]) -> None:
    """Write rows as CSV (default) or JSON to --out or stdout."""
    if getattr(args, "json", False):
        payload = {
            "rows": [{c: _json_cell(r.get(c)) for c in columns} for r in rows]
        }
        text = json.dumps(payload, indent=2, allow_nan=False) + "\n"
    else:
        lines = [",".join(columns)]
        lines.extend(
            ",".join(_fmt(r.get(c)) for c in columns) for r in rows
        )
        text = "\n".join(lines) + "\n"
    _write_text(args, text)


def _write_text(args: argparse.Namespace, text: str) -> None:
    out = getattr(args, "out", None)
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# Argument plumbing
# ---------------------------------------------------------------------------

class _ArgumentParser(argparse.ArgumentParser):
    """Parser whose failures surface as exit code 1 instead of argparse's 2."""

    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


_PARAM_FLAGS: tuple[tuple[str, str, str], ...] = (
    ("--M", "M", "mass parameter"),
    ("--kappa", "kappa",
     "angular quantum number (integer; half-integer in planar geometry)"),
    ("--mu-n", "mu_n", "sign/strength multiplier of the confining coupling"),
    ("--alpha", "alpha", "1/r strength of the potential channel"),
    ("--beta", "beta", "1/r strength of the mass-like channel"),
    ("--beta1", "beta1", "linear strength of the mass-like channel"),
    ("--gamma0", "gamma0", "constant term of the confining coupling"),
    ("--gamma1", "gamma1", "linear strength of the confining coupling"),
    ("--btilde", "btilde", "magnetic field strength (charge folded in)"),
)


def _add_param_flags(sp: argparse.ArgumentParser) -> None:
    for flag, dest, help_text in _PARAM_FLAGS:
        sp.add_argument(flag, dest=dest, type=float, default=None,
                        metavar="X", help=help_text)


def _add_output_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--out", dest="out", metavar="PATH",
                    help="write the result to a file instead of stdout")
    sp.add_argument("--json", dest="json", action="store_true",
                    help="emit JSON instead of CSV")


def _require(args: argparse.Namespace, *names: str) -> None:
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise UsageError(f"missing required flag(s): {flags}")


def _flag(args: argparse.Namespace, name: str, default: float) -> float:
    value = getattr(args, name)
    return default if value is None else value


# ---------------------------------------------------------------------------
# Oracle confirmation of a single energy
# ---------------------------------------------------------------------------

def _gap_limited(inst: ProblemInstance) -> bool:
    """True when every polynomial coupling vanishes, so bound states can
    only exist inside the mass gap (-M, M) and search brackets must be
    clamped to it."""
    pot = inst.potentials
    return not (
        any(c != 0.0 for c in pot.alpha_poly)
        or any(c != 0.0 for c in pot.beta_poly)
        or any(c != 0.0 for c in pot.gamma_poly)
    )


def _oracle_confirm(inst: ProblemInstance, eps_alg: float,
                    config: ShootingConfig) -> ShootingResult:
    """Shooting root nearest to an algebraic energy.

    Tries a short sequence of widening brackets centred on the value;
    re-raises the final ``NoRootInBracketError`` if none captures a sign
    change of the mismatch."""
    clamp = _gap_limited(inst)
    last: NoRootInBracketError | None = None
    for rel in (1e-3, 4e-3, 1.6e-2):
        width = rel * max(1.0, abs(eps_alg))
        lo, hi = eps_alg - width, eps_alg + width
        if clamp:
            lim = abs(inst.params.M) * (1.0 - 1e-9)
            lo, hi = max(lo, -lim), min(hi, lim)
            if not lo < hi:
                continue
        try:
            return find_eigenvalue(inst, (lo, hi), config)
        except NoRootInBracketError as exc:
            last = exc
    if last is None:
        raise NoRootInBracketError(
            f"no admissible energy bracket around {eps_alg:.12g}"
        )
    raise last


# ---------------------------------------------------------------------------
# spectrum
# ---------------------------------------------------------------------------

_SPECTRUM_COLUMNS = ("n", "eps_plus", "eps_minus", "residual",
                     "oracle_eps", "abs_delta")


def _spectrum_result(args: argparse.Namespace) -> ExactSpectrumResult:
    family = args.family
    if family == "oscillator":
        _require(args, "M", "kappa")
        return oscillator_spectrum(
            args.M, args.kappa, _flag(args, "mu_n", 1.0), args.n_max
        )
    if family == "extended-oscillator":
        _require(args, "M", "kappa", "beta1", "gamma1")
        return extended_oscillator_spectrum(
            args.M, args.kappa, args.beta1, args.gamma1, args.n_max
        )
    if family == "coulomb":
        _require(args, "M", "kappa")
        return coulomb_spectrum(
            args.M, args.kappa, _flag(args, "alpha", 0.0),
            _flag(args, "beta", 0.0), args.n_max
        )
    raise AssertionError(family)


def cmd_spectrum(args: argparse.Namespace) -> int:
    result = _spectrum_result(args)
    config = ShootingConfig(steps=_ORACLE_STEPS)
    rows: list[dict] = []
    for n in sorted(set(result.indices)):
        level_ids = [i for i, m in enumerate(result.indices) if m == n]
        eps_plus = eps_minus = None
        for i in level_ids:
            if result.levels[i] >= 0.0:
                eps_plus = result.levels[i]
            else:
                eps_minus = result.levels[i]
        residual = max(result.residuals[i] for i in level_ids)
        # The oracle column confirms the non-negative branch (or the
        # unpaired negative level when that is all the ladder index has).
        rep = eps_plus if eps_plus is not None else eps_minus
        shot = _oracle_confirm(result.instance, rep, config)
        rows.append({
            "n": n,
            "eps_plus": eps_plus,
            "eps_minus": eps_minus,
            "residual": residual,
            "oracle_eps": shot.epsilon,
            "abs_delta": abs(shot.epsilon - rep),
        })
    _emit(args, _SPECTRUM_COLUMNS, rows)
    return EXIT_OK


# ---------------------------------------------------------------------------
# qes-scan
# ---------------------------------------------------------------------------

_SCAN_COLUMNS = ("sweep_value", "branch_id", "fixed_coupling",
                 "epsilon", "sigma_min")

# Per sweep point the solver returns (sign, coupling, epsilon, sigma_min)
# tuples; `coupling` is the member of the parameter set that the
# constraint system itself fixes (alpha for planar, gamma0 for extended).
_Root = tuple[int, float, float, float]


def _parse_sweep(text: str) -> tuple[str, float, float, int]:
    parts = text.split(":")
    if len(parts) != 4:
        raise UsageError("--sweep expects param:start:stop:points")
    param = parts[0]
    try:
        start, stop, points = float(parts[1]), float(parts[2]), int(parts[3])
    except ValueError:
        raise UsageError(f"malformed --sweep value {text!r}") from None
    if not (math.isfinite(start) and math.isfinite(stop)):
        raise UsageError("sweep bounds must be finite")
    if not start < stop:
        raise UsageError("sweep start must lie below stop")
    if points < 2:
        raise UsageError("sweep needs at least 2 grid points")
    return param, start, stop, points


def _assign_branches(
    values: Sequence[float], per_point: Sequence[list[_Root]]
) -> list[dict]:
    """Flatten per-point roots into output rows with branch identifiers
    chosen by nearest-coupling continuation within an energy-sign branch."""
    rows: list[dict] = []
    last_seen: list[tuple[int, float]] = []  # branch_id -> (sign, coupling)
    for value, roots in zip(values, per_point):
        assignment: dict[int, int] = {}
        taken: set[int] = set()
        candidates = sorted(
            (abs(coupling - seen_coupling), root_id, branch_id)
            for root_id, (sign, coupling, _e, _s) in enumerate(roots)
            for branch_id, (seen_sign, seen_coupling) in enumerate(last_seen)
            if seen_sign == sign
        )
        for _dist, root_id, branch_id in candidates:
            if root_id in assignment or branch_id in taken:
                continue
            assignment[root_id] = branch_id
            taken.add(branch_id)
        for root_id, root in enumerate(roots):
            if root_id not in assignment:
                assignment[root_id] = len(last_seen)
                last_seen.append((root[0], root[1]))
        for root_id, (sign, coupling, eps, smin) in enumerate(roots):
            branch_id = assignment[root_id]
            last_seen[branch_id] = (sign, coupling)
            rows.append({
                "sweep_value": value,
                "branch_id": branch_id,
                "fixed_coupling": coupling,
                "epsilon": eps,
                "sigma_min": smin,
            })
    return rows


def cmd_qes_scan(args: argparse.Namespace) -> int:
    if args.sweep is None:
        raise UsageError("qes-scan requires --sweep param:start:stop:points")
    param, start, stop, points = _parse_sweep(args.sweep)
    family = args.family

    solve_at: Callable[[float], list[_Root]]
    if family == "planar":
        _require(args, "kappa")
        if param != "M":
            raise UsageError(
                "planar scans sweep M (the coupling is solved for); "
                "use --sweep M:start:stop:points"
            )
        if args.M is not None:
            raise UsageError("planar scans take M from --sweep, not --M")
        kappa, n = args.kappa, args.n

        def solve_at(value: float) -> list[_Root]:
            sols = planar_solve(planar_build(value, kappa, n))
            return [(s.sign, s.alpha, s.epsilon, s.sigma_min) for s in sols]

    elif family == "extended":
        _require(args, "M", "kappa", "beta1", "gamma1")
        if param != "alpha":
            raise UsageError(
                "extended scans sweep alpha; "
                "use --sweep alpha:start:stop:points"
            )
        M, kappa = args.M, args.kappa
        beta1, gamma1, n = args.beta1, args.gamma1, args.n

        def solve_at(value: float) -> list[_Root]:
            sols = extended_solve(
                extended_build(M, kappa, value, beta1, gamma1, n)
            )
            return [(s.sign, s.gamma0, s.epsilon, s.sigma_min) for s in sols]

    else:
        raise AssertionError(family)

    step = (stop - start) / (points - 1)
    values = [start + step * i for i in range(points)]
    with ThreadPoolExecutor(max_workers=min(8, points)) as pool:
        per_point = list(pool.map(solve_at, values))

    rows = _assign_branches(values, per_point)
    if not rows:
        print("warning: no accepted roots anywhere on the sweep",
              file=sys.stderr)
    _emit(args, _SCAN_COLUMNS, rows)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

_VERIFY_COLUMNS = ("eps_algebraic", "eps_oracle", "abs_delta",
                   "nodes", "normalizable", "status")


def _family_instance(args: argparse.Namespace) -> ProblemInstance:
    """Preset instance for a spectrum family from explicit flags (used
    when energies are supplied rather than derived)."""
    family = args.family
    if family == "oscillator":
        _require(args, "M", "kappa")
        return preset(Preset.DIRAC_OSCILLATOR, {
            "M": args.M, "kappa": args.kappa,
            "mu_n": _flag(args, "mu_n", 1.0),
        })
    if family == "extended-oscillator":
        _require(args, "M", "kappa", "beta1", "gamma1")
        return preset(Preset.EXTENDED_OSCILLATOR_ES, {
            "M": args.M, "kappa": args.kappa,
            "beta1": args.beta1, "gamma1": args.gamma1,
        })
    _require(args, "M", "kappa")
    return preset(Preset.DIRAC_COULOMB, {
        "M": args.M, "kappa": args.kappa,
        "alpha": _flag(args, "alpha", 0.0),
        "beta": _flag(args, "beta", 0.0),
    })


def _verify_pairs(
    args: argparse.Namespace,
) -> list[tuple[ProblemInstance, float]]:
    """(instance, algebraic energy) pairs to put before the oracle."""
    explicit = list(args.epsilon or [])
    if args.instance is not None:
        if args.family is not None:
            raise UsageError(
                "give either a preset family or --instance, not both"
            )
        if not explicit:
            raise UsageError("--instance requires at least one --epsilon")
        inst = load_instance(args.instance)
        return [(inst, e) for e in explicit]

    family = args.family
    if family is None:
        raise UsageError("verify needs a preset family or --instance FILE")
    if not explicit and not args.from_algebra:
        raise UsageError("supply --epsilon values or --from-algebra")

    if family in ("oscillator", "extended-oscillator", "coulomb"):
        if explicit:
            inst = _family_instance(args)
            return [(inst, e) for e in explicit]
        result = _spectrum_result(args)
        return [(result.instance, e) for e in result.levels]

    if family == "planar":
        _require(args, "kappa")
        btilde = _flag(args, "btilde", 1.0)
        if explicit:
            _require(args, "M", "alpha")
            inst = preset(Preset.PLANAR_COULOMB_MAGNETIC, {
                "M": args.M, "kappa": args.kappa,
                "alpha": args.alpha, "Btilde": btilde,
            })
            return [(inst, e) for e in explicit]
        _require(args, "M")
        if args.n == 0:
            sols = planar_n0_closed_form(args.M, args.kappa)
        else:
            sols = planar_solve(planar_build(args.M, args.kappa, args.n))
        if not sols:
            raise NoAlgebraicSolutionError(
                "the planar constraint system has no roots to verify"
            )
        return [planar_to_instance(s, btilde) for s in sols]

    if family == "extended":
        _require(args, "M", "kappa", "alpha", "beta1", "gamma1")
        if explicit:
            _require(args, "gamma0")
            inst = preset(Preset.EXTENDED_OSCILLATOR_QES, {
                "M": args.M, "kappa": args.kappa, "alpha": args.alpha,
                "beta1": args.beta1, "gamma0": args.gamma0,
                "gamma1": args.gamma1,
            })
            return [(inst, e) for e in explicit]
        system = extended_build(args.M, args.kappa, args.alpha,
                                args.beta1, args.gamma1, args.n)
        sols = extended_solve(system)
        if not sols:
            raise NoAlgebraicSolutionError(
                "the extended constraint system has no roots to verify"
            )
        return [extended_to_instance(system, s) for s in sols]

    raise AssertionError(family)


def cmd_verify(args: argparse.Namespace) -> int:
    pairs = _verify_pairs(args)
    config = ShootingConfig(steps=_ORACLE_STEPS)
    rows: list[dict] = []
    failures: list[dict] = []
    for inst, eps_alg in pairs:
        try:
            shot = _oracle_confirm(inst, eps_alg, config)
        except NoRootInBracketError:
            row = {
                "eps_algebraic": eps_alg, "eps_oracle": None,
                "abs_delta": None, "nodes": None,
                "normalizable": False, "status": "FAIL",
            }
            rows.append(row)
            failures.append(row)
            continue
        delta = abs(shot.epsilon - eps_alg)
        ok = delta < args.tol
        row = {
            "eps_algebraic": eps_alg,
            "eps_oracle": shot.epsilon,
            "abs_delta": delta,
            "nodes": shot.nodes,
            "normalizable": shot.normalizable,
            "status": "PASS" if ok else "FAIL",
        }
        rows.append(row)
        if not ok:
            failures.append(row)
    _emit(args, _VERIFY_COLUMNS, rows)
    if failures:
        print(
            f"verification failed for {len(failures)} of {len(rows)} "
            "energies:", file=sys.stderr,
        )
        for row in failures:
            print("  " + ",".join(_fmt(row.get(c)) for c in _VERIFY_COLUMNS),
                  file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


# ---------------------------------------------------------------------------
# preset-dump
# ---------------------------------------------------------------------------

_PRESET_PARAM_DESTS = (
    ("M", "M"), ("kappa", "kappa"), ("mu_n", "mu_n"), ("alpha", "alpha"),
    ("beta", "beta"), ("beta1", "beta1"), ("gamma0", "gamma0"),
    ("gamma1", "gamma1"), ("btilde", "Btilde"),
)


def cmd_preset_dump(args: argparse.Namespace) -> int:
    params = {
        pname: getattr(args, dest)
        for dest, pname in _PRESET_PARAM_DESTS
        if getattr(args, dest) is not None
    }
    inst = preset(args.name, params)
    _write_text(args, dumps_instance(inst))
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="diracqes",
        description="Exact and quasi-exact radial Dirac spectra with an "
                    "independent shooting-method cross-check.",
    )
    sub = parser.add_subparsers(dest="command", metavar="command",
                                required=True)

    sp = sub.add_parser(
        "spectrum",
        help="exact bound-state ladder with shooting confirmation",
        description="Columns: n, eps_plus, eps_minus, residual, "
                    "oracle_eps, abs_delta.",
    )
    sp.add_argument("family",
                    choices=("oscillator", "extended-oscillator", "coulomb"))
    _add_param_flags(sp)
    sp.add_argument("--n-max", dest="n_max", type=int, default=3,
                    metavar="N", help="highest ladder index (default 3)")
    _add_output_flags(sp)
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser(
        "qes-scan",
        help="sweep a QES constraint system and emit its root branches",
        description="Columns: sweep_value, branch_id, fixed_coupling, "
                    "epsilon, sigma_min.  The planar family sweeps M and "
                    "fixes alpha per root; the extended family sweeps "
                    "alpha and fixes gamma0 per root.",
    )
    sp.add_argument("family", choices=("planar", "extended"))
    _add_param_flags(sp)
    sp.add_argument("--n", dest="n", type=int, default=0, metavar="N",
                    help="polynomial ansatz degree index (default 0)")
    sp.add_argument("--sweep", dest="sweep",
                    metavar="param:start:stop:points",
                    help="sweep specification, e.g. M:0:1:101")
    _add_output_flags(sp)
    sp.set_defaults(func=cmd_qes_scan)

    sp = sub.add_parser(
        "verify",
        help="confirm algebraic energies against the shooting integrator",
        description="Columns: eps_algebraic, eps_oracle, abs_delta, nodes, "
                    "normalizable, status.  Exit code 0 only if every row "
                    "is within --tol; mismatches are listed on stderr.",
    )
    sp.add_argument("family", nargs="?", default=None,
                    choices=("oscillator", "extended-oscillator", "coulomb",
                             "planar", "extended"))
    _add_param_flags(sp)
    sp.add_argument("--n", dest="n", type=int, default=0, metavar="N",
                    help="QES ansatz degree index (default 0)")
    sp.add_argument("--n-max", dest="n_max", type=int, default=3,
                    metavar="N", help="highest ladder index (default 3)")
    sp.add_argument("--instance", dest="instance", metavar="PATH",
                    help="JSON problem description to verify against")
    sp.add_argument("--epsilon", dest="epsilon", type=float,
                    action="append", metavar="E",
                    help="energy to confirm (repeatable)")
    sp.add_argument("--from-algebra", dest="from_algebra",
                    action="store_true",
                    help="derive the energies from the algebraic solver")
    sp.add_argument("--tol", dest="tol", type=float, default=1e-6,
                    metavar="T",
                    help="confirmation tolerance on |delta eps| "
                         "(default 1e-6)")
    _add_output_flags(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser(
        "preset-dump",
        help="print the JSON problem description of a named preset",
    )
    sp.add_argument("name", choices=[p.value for p in Preset])
    _add_param_flags(sp)
    _add_output_flags(sp)
    sp.set_defaults(func=cmd_preset_dump)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigurationError, ValidationError, DomainError,
            SingularConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DiracQesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    raise SystemExit(main())

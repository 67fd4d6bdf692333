"""Command-line front end: ``symstri <group> <command> [options]``.

Every CSV starts with one ``# schema=1 {...}`` line echoing the full run
configuration; the rest of the file depends only on that configuration.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from fractions import Fraction

import numpy as np
from scipy import special

from . import farey, kernel_lab, quad_count, space_catalog, spherical_fn, strichartz_lab
from .space_catalog import CatalogError, DomainError, as_fraction
from .spherical_fn import PrecisionError
from .tables import ScanTable, jsonable, metadata_line, write_atomic

EXIT_DOMAIN = 1
EXIT_USAGE = 2
EXIT_PRECISION = 3


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.replace(" ", "").split(",") if x)


def _fracs(text: str) -> list[Fraction]:
    return [as_fraction(x) for x in text.replace(" ", "").split(",") if x]


def _num(text: str):
    """Exact rational if possible ("3", "7/2"), else float."""
    f = as_fraction(text)
    return int(f) if f.denominator == 1 else f


def _threads(args) -> int:
    if getattr(args, "threads", None):
        return max(1, int(args.threads))
    env = os.environ.get("SYMSTRI_THREADS")
    return max(1, int(env)) if env else 1


def _load_form(spec: str) -> quad_count.QuadForm:
    if spec.upper().startswith("I") and spec[1:].isdigit():
        return quad_count.identity_form(int(spec[1:]))
    with open(spec) as fh:
        return quad_count.form_from_dict(json.load(fh))


def run_config(args) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("func",)}
    cfg["command"] = " ".join(str(x) for x in (args.group, args.cmd) if x)
    return jsonable({k: (str(v) if isinstance(v, Fraction) else v) for k, v in cfg.items()})


def _emit_table(args, table: ScanTable) -> None:
    text = table.to_csv(run_config(args))
    if args.out:
        write_atomic(args.out, text)
    else:
        sys.stdout.write(text)
    if getattr(args, "summary", None):
        write_atomic(args.summary, table.summary_json() + "\n")
    elif args.out:
        print(table.summary_json())


def _emit_json(args, doc: dict) -> None:
    text = json.dumps(jsonable(doc), indent=2, sort_keys=True) + "\n"
    if getattr(args, "out", None):
        write_atomic(args.out, metadata_line(run_config(args)) + "\n" + text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# handlers


def cmd_space_list(args) -> None:
    for name in space_catalog.CATALOG_EXAMPLES:
        s = space_catalog.catalog_get(name)
        print(f"{name}\trank={s.rank}\tdim={s.dim}\tperiod={space_catalog.period(s)}")


def cmd_space_info(args) -> None:
    s = space_catalog.load_space(args.space)
    print(space_catalog.describe(s))
    print(f"volume: {s.volume!r}")
    if args.json:
        print(json.dumps(s.to_dict(), indent=2))


def _closed_form_phi(space, lam, x) -> complex:
    """Independent reference: scipy Gegenbauer / exponentials per factor."""
    val = 1.0 + 0j
    for f, xf in zip(space.factors, x):
        c = lam[f.coords]
        if f.kind == "torus":
            val *= np.exp(1j * float(np.dot(c, xf)))
        else:
            n, alpha = int(c[0]), f.gegenbauer_alpha
            val *= special.eval_gegenbauer(n, alpha, math.cos(xf)) / special.eval_gegenbauer(n, alpha, 1.0)
    return val


def cmd_spherical_eval(args) -> None:
    s = space_catalog.load_space(args.space)
    lam = _ints(args.lam)
    points = []
    if args.grid:
        if len(s.factors) != 1 or not s.factors[0].compact:
            raise DomainError("--grid needs a single compact factor")
        points = [(float(th),) for th in np.linspace(0.0, np.pi, args.grid)]
    else:
        x = []
        for f, tok in zip(s.factors, args.x.split(";")):
            vals = [float(as_fraction(v)) for v in tok.split(",")]
            x.append(np.array(vals) if f.kind == "torus" else vals[0])
        points = [tuple(x)]
    table = ScanTable(("lambda_coords", "theta", "value_real", "value_imag", "reference", "abs_error"))
    for x in points:
        val = complex(spherical_fn.phi_zonal(s, lam, x))
        ref = _closed_form_phi(s, lam, x)
        theta = ";".join(" ".join(map(str, np.atleast_1d(v))) for v in x)
        table.rows.append((" ".join(map(str, lam)), theta, val.real, val.imag, ref.real, abs(val - ref)))
    table.summary = {"lam": lam, "dim": space_catalog.dim_weight(s, lam), "max_abs_error": max(r[-1] for r in table.rows)}
    _emit_table(args, table)


def cmd_spherical_check(args) -> None:
    theta = np.linspace(0.0, np.pi, args.thetas)
    table = ScanTable(("n", "max_abs_error"))
    for n in range(args.nmax + 1):
        lap = spherical_fn.laplace_table(n, theta, args.quad_points)[n]
        ref = spherical_fn.legendre_recurrence(n, np.cos(2 * theta))
        table.rows.append((n, float(np.max(np.abs(lap - ref)))))
    table.summary = {"max_error": max(r[1] for r in table.rows), "quad_points": args.quad_points}
    _emit_table(args, table)


def cmd_support_check(args) -> None:
    s = space_catalog.load_space(args.space)
    res = spherical_fn.support_check(s, _ints(args.lam), _ints(args.mu), seed=args.seed, tol=args.tol)
    table = ScanTable(("lambda_coords", "mu_coords", "nu", "norm", "detected", "predicted"))
    pred = set(res["predicted"])
    lam, mu = " ".join(args.lam.split(",")), " ".join(args.mu.split(","))
    for nu, v in sorted(res["norms"].items()):
        table.rows.append((lam, mu, " ".join(map(str, nu)), v, v > args.tol, nu in pred))
    table.summary = {"sound": res["sound"], "detected": res["detected"], "degree": res["degree"]}
    _emit_table(args, table)


def cmd_kernel_scan(args) -> None:
    s = space_catalog.load_space(args.space)
    if args.parseval:
        _emit_json(args, kernel_lab.parseval_check(s, args.N))
        return
    table = kernel_lab.kernel_bound_scan(s, args.N, t_samples=args.t_samples, x_profile_samples=args.x_samples)
    _emit_table(args, table)


def cmd_farey_dissect(args) -> None:
    n = args.order
    table = ScanTable(("a", "q", "left_num", "left_den", "right_num", "right_den"))
    for fr in farey.farey_sequence(n):
        arc = farey.farey_arc_of(fr.a, fr.q, n)
        l, r = arc.left, arc.right
        table.rows.append((fr.a, fr.q, l.numerator, l.denominator, r.numerator, r.denominator))
    table.summary = {"order": n, "size": len(table.rows)}
    _emit_table(args, table)


def cmd_farey_spectrum(args) -> None:
    N = as_fraction(args.N)
    res = farey.indicator_spectrum(N, args.Q, args.L, args.period)
    bound = args.Q**2 / (float(N) * args.L)
    table = ScanTable(("n", "coeff_mod", "bound"), [(k, float(abs(c)), bound) for k, c in enumerate(res.coeffs)])
    table.summary = {
        "N": str(N), "Q": args.Q, "L": args.L, "sup": res.sup_value, "argmax": res.argmax,
        "l1_mass": str(res.l1_mass), "normalized": res.sup_value / bound,
    }
    _emit_table(args, table)


def cmd_count_reps(args) -> None:
    form = _load_form(args.form)
    counts = quad_count.rep_counts(form, args.max_n, _threads(args))
    table = ScanTable(("n", "count"), [(n, int(c)) for n, c in enumerate(counts)])
    table.summary = {"form": form.to_dict(), "max_n": args.max_n, "total": int(counts.sum())}
    _emit_table(args, table)


def cmd_count_fit(args) -> None:
    form = _load_form(args.form)
    fit = quad_count.rep_exponent_fit(form, args.max_n, _threads(args))
    _emit_json(args, fit.to_dict())


def cmd_count_theta(args) -> None:
    form = _load_form(args.form)
    if args.t is not None:
        chk = quad_count.theta_major_arc_check(form, args.n, as_fraction(args.t))
        _emit_json(args, {"value": [chk.value.real, chk.value.imag], "abs": abs(chk.value), "bound": chk.bound,
                          "ratio": chk.ratio, "a": chk.tag.a, "q": chk.tag.q, "L": chk.tag.L})
        return
    _emit_table(args, quad_count.theta_scan(form, args.n, args.a, args.q, args.samples, args.seed))


def cmd_count_pairs(args) -> None:
    s = space_catalog.load_space(args.space)
    if args.center is not None:
        cnt = quad_count.joint_pair_count(s, _fracs(args.center), as_fraction(args.side), _num(args.N2), as_fraction(args.n))
        _emit_json(args, {"count": cnt})
        return
    _emit_table(args, quad_count.pair_count_scan(s, _ints(args.N2_list), args.N1))


def cmd_stri_scan(args) -> None:
    s = space_catalog.load_space(args.space)
    table = strichartz_lab.strichartz_scan(
        s, args.p, list(_ints(args.N_list)), args.trials, args.seed, n_atoms=args.n_atoms,
        probe=not args.no_probe, mc_points=args.mc_points, threads=_threads(args),
    )
    _emit_table(args, table)


def cmd_stri_bilinear(args) -> None:
    s = space_catalog.load_space(args.space)
    table = strichartz_lab.bilinear_scan(
        s, args.N1, list(_ints(args.N2_list)), args.trials, args.mc_points, args.seed,
        probe=not args.no_probe, n_atoms=args.n_atoms, threads=_threads(args),
    )
    _emit_table(args, table)


def cmd_eigen_scan(args) -> None:
    s = space_catalog.load_space(args.space)
    table = strichartz_lab.eigenfunction_lp_scan(s, args.p, _fracs(args.shells), args.trials, args.seed, args.mc_points)
    _emit_table(args, table)


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="symstri", description=__doc__.splitlines()[0])
    groups = parser.add_subparsers(dest="group", metavar="group")
    groups.required = True

    def command(group, name, func, help_text):
        p = group.add_parser(name, help=help_text)
        p.set_defaults(func=func, cmd=name)
        p.add_argument("--out", help="output file (written atomically); default stdout")
        p.add_argument("--summary", help="write the JSON summary here")
        p.add_argument("--threads", type=int, help="worker cap (default: $SYMSTRI_THREADS or 1)")
        return p

    def group(name, help_text):
        g = groups.add_parser(name, help=help_text)
        sub = g.add_subparsers(dest="cmd", metavar="command")
        sub.required = True
        return sub

    g = group("space", "catalog of spaces")
    command(g, "list", cmd_space_list, "list catalog examples")
    p = command(g, "info", cmd_space_info, "describe one space")
    p.add_argument("--space", required=True)
    p.add_argument("--json", action="store_true")

    g = group("spherical", "spherical functions")
    p = command(g, "eval", cmd_spherical_eval, "phi_lambda at a zonal point")
    p.add_argument("--space", required=True)
    p.add_argument("--lam", required=True, help="comma-separated weight")
    p.add_argument("--x", help="per-factor zonal coordinates, factors separated by ';'")
    p.add_argument("--grid", type=int, help="evaluate on this many angles in [0, pi] instead")
    p = command(g, "check", cmd_spherical_check, "Laplace integral vs Legendre recurrence")
    p.add_argument("--nmax", type=int, default=40)
    p.add_argument("--thetas", type=int, default=256)
    p.add_argument("--quad-points", type=int, default=256)

    g = group("support", "Fourier support of products")
    p = command(g, "check", cmd_support_check, "project a product of two atoms onto eigenspaces")
    p.add_argument("--space", required=True)
    p.add_argument("--lam", required=True)
    p.add_argument("--mu", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-8)

    g = group("kernel", "Schroedinger kernel")
    p = command(g, "scan", cmd_kernel_scan, "dispersive bound scan over major arcs")
    p.add_argument("--space", required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--t-samples", type=int)
    p.add_argument("--x-samples", type=int)
    p.add_argument("--parseval", action="store_true", help="run the Parseval check instead")

    g = group("farey", "Farey dissection")
    p = command(g, "dissect", cmd_farey_dissect, "Farey sequence with mediant arcs")
    p.add_argument("--order", type=int, required=True)
    p = command(g, "spectrum", cmd_farey_spectrum, "Fourier sup of indicators of M_{Q,L}")
    p.add_argument("--N", required=True)
    p.add_argument("--Q", type=int, required=True)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--period", type=int, default=1)

    g = group("count", "quadratic-form counts")
    p = command(g, "reps", cmd_count_reps, "representation numbers r_Q(n), n <= max-n")
    p.add_argument("--form", required=True, help="JSON form file or I<r>")
    p.add_argument("--max-n", type=int, required=True)
    p = command(g, "fit", cmd_count_fit, "growth exponent of the running max of r_Q")
    p.add_argument("--form", required=True)
    p.add_argument("--max-n", type=int, required=True)
    p = command(g, "theta", cmd_count_theta, "theta sum against the major-arc bound")
    p.add_argument("--form", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--t", help="single time fraction t/(2 pi), e.g. 1/2")
    p.add_argument("--a", type=int, default=1)
    p.add_argument("--q", type=int, default=2)
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p = command(g, "pairs", cmd_count_pairs, "joint pair counts")
    p.add_argument("--space", required=True)
    p.add_argument("--center", help="cube center, comma-separated (single count)")
    p.add_argument("--side")
    p.add_argument("--N2")
    p.add_argument("--n")
    p.add_argument("--N2-list", default="4,8,16", help="scan mode")
    p.add_argument("--N1", type=int)

    g = group("stri", "Strichartz scans")
    p = command(g, "scan", cmd_stri_scan, "linear space-time L^p scaling scan")
    p.add_argument("--space", required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--N-list", required=True)
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-atoms", type=int)
    p.add_argument("--mc-points", type=int, default=200_000)
    p.add_argument("--no-probe", action="store_true")
    p = command(g, "bilinear", cmd_stri_bilinear, "bilinear L^2 scaling scan")
    p.add_argument("--space", required=True)
    p.add_argument("--N1", type=int, required=True)
    p.add_argument("--N2-list", required=True)
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-atoms", type=int)
    p.add_argument("--mc-points", type=int, default=200_000)
    p.add_argument("--no-probe", action="store_true")

    g = group("eigen", "eigenfunction scans")
    p = command(g, "scan", cmd_eigen_scan, "sampled L^p norms of random eigenfunctions")
    p.add_argument("--space", required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--shells", required=True, help="comma-separated shell values n = |lam|^2")
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mc-points", type=int, default=20_000)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # unknown commands exit with status 2 and usage text
    try:
        args.func(args)
    except PrecisionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for k, v in exc.required.items():
            print(f"required {k}: {v}", file=sys.stderr)
        return EXIT_PRECISION
    except (DomainError, CatalogError, quad_count.FitError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front door.

Every JSON report embeds a run manifest (tool version, exact command line,
master seed, canonical form fingerprint, timestamps, thread count) so a run
can be reproduced from its own output.  Exit codes: 0 success, 1 usage error,
2 experiment verdict failure.
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import math
import os
import secrets
import sys

import numpy as np

from . import __version__, geometry, spectral, valdist
from . import experiments as exper
from . import group as grp
from .counting import count_cap, count_khintchine, estimate_kappa, predicted_exponents
from .enumeration import enumerate_primitive, primitive_points
from .quadform import EllipsoidForm, QuadraticSpace, parse_form_spec


def _fingerprint(form) -> tuple[str, str]:
    if form is None:
        return "", ""
    if isinstance(form, EllipsoidForm):
        canonical = form.space.fingerprint_text()
    else:
        canonical = form.fingerprint_text()
    return canonical, hashlib.sha256(canonical.encode()).hexdigest()


def make_manifest(args_list, seed, form, threads, started) -> dict:
    canonical, digest = _fingerprint(form)
    return {
        "tool_version": __version__,
        "command": "conecount " + " ".join(args_list),
        "seed": seed,
        "form_canonical": canonical,
        "form_fingerprint": digest,
        "started_utc": started,
        "finished_utc": _now(),
        "threads": threads,
    }


def validate_manifest(report: dict) -> bool:
    man = report.get("manifest", {})
    digest = hashlib.sha256(man.get("form_canonical", "").encode()).hexdigest()
    if man.get("form_canonical", "") == "":
        return man.get("form_fingerprint", "") == ""
    return digest == man.get("form_fingerprint")


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _resolve_seed(value) -> int:
    if value is None:
        seed = secrets.randbits(32)
        print(f"seed={seed}", file=sys.stderr)
        return seed
    return int(value)


def _emit(payload: dict, out_path):
    text = json.dumps(payload, indent=2, default=float)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _alpha_from_text(text: str, n: int):
    alpha = geometry._parse_alpha(text)
    if len(alpha) != n + 1:
        raise SystemExit(f"alpha needs {n + 1} comma separated entries")
    return alpha


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="conecount", description=__doc__)
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("enumerate", help="list primitive cone points by height")
    p.add_argument("--form", required=True)
    p.add_argument("--qmax", type=int, required=True)
    p.add_argument("--out")

    p = sub.add_parser("count-cap", help="count rational points in a metric cap")
    p.add_argument("--form", required=True)
    p.add_argument("--alpha", required=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--kappa", default="auto")
    p.add_argument("--out")

    p = sub.add_parser("count-khintchine", help="count psi-approximations by random or fixed directions")
    p.add_argument("--form", required=True)
    p.add_argument("--psi", required=True)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--alpha")
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")

    p = sub.add_parser("measure", help="evaluate region measures")
    p.add_argument("--region", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out")

    p = sub.add_parser("valdist", help="value distribution counts for linear/homogeneous maps")
    p.add_argument("--kind", choices=("linear", "homog"), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--d", type=float)
    p.add_argument("--g", default="id")
    p.add_argument("--h", default="id")
    p.add_argument("--target", required=True)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--out")

    p = sub.add_parser("spectral", help="secondary-term quadratic form for a separable function")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--rho", required=True, help="radial interval a,b")
    p.add_argument("--cap-r", type=float)
    p.add_argument("--dmax", type=int, default=64)
    p.add_argument("--out")

    p = sub.add_parser("experiment", help="run a seeded experiment campaign")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)

    p = sub.add_parser("constants", help="print the closed-form constants and exponent table")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out")
    return parser


def dispatch(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    started = _now()
    threads = getattr(args, "threads", None) or os.cpu_count() or 1

    try:
        if args.cmd == "enumerate":
            form = parse_form_spec(args.form)
            if not isinstance(form, EllipsoidForm):
                raise SystemExit("enumerate needs an ellipsoid-family form")
            lines = ["q," + ",".join(f"v_{i + 1}" for i in range(form.dim + 1))]
            for cp in enumerate_primitive(form, args.qmax):
                lines.append(",".join(str(x) for x in (cp.q, *cp.v)))
            text = "\n".join(lines) + "\n"
            if args.out:
                with open(args.out, "w", encoding="utf-8") as fh:
                    fh.write(text)
            else:
                sys.stdout.write(text)
            return 0

        if args.cmd == "count-cap":
            form = parse_form_spec(args.form)
            alpha = _alpha_from_text(args.alpha, form.n)
            tau_e = form.ellipsoid_tau()
            x = np.asarray(alpha, dtype=float) @ np.linalg.inv(tau_e)
            kappa = None if args.kappa == "auto" else float(args.kappa)
            rep = count_cap(form, x, args.r, args.T, kappa=kappa)
            payload = {
                **rep.as_dict(),
                "kappa_source": rep.meta.get("kappa_source"),
                "manifest": make_manifest(argv, None, form, threads, started),
            }
            _emit(payload, args.out)
            return 0

        if args.cmd == "count-khintchine":
            form = parse_form_spec(args.form)
            psi = geometry.parse_psi(args.psi)
            seed = _resolve_seed(args.seed)
            pts = primitive_points(form, max(math.ceil(args.T) - 1, 0))
            tau_inv = np.linalg.inv(form.ellipsoid_tau())
            reports = []
            if args.alpha:
                alphas = [np.asarray(_alpha_from_text(args.alpha, form.n), dtype=float)]
            else:
                alphas = [
                    grp.sample_sphere(form.n, exper.trial_rng(seed, 0, t))
                    for t in range(args.trials)
                ]
            for alpha in alphas:
                rep = count_khintchine(form, alpha @ tau_inv, psi, args.T, points=pts)
                reports.append(rep.as_dict())
            payload = {
                "trials": reports,
                "manifest": make_manifest(argv, seed, form, threads, started),
            }
            _emit(payload, args.out)
            return 0

        if args.cmd == "measure":
            region = geometry.parse_region(args.region)
            n = args.n
            if isinstance(region, geometry.SphericalCap):
                payload = {
                    "kind": "cap",
                    "exact": geometry.cap_measure_exact(n, float(region.r)),
                    "leading": geometry.cap_measure_leading(n, float(region.r)),
                }
            elif isinstance(region, geometry.Sector):
                payload = {
                    "kind": "sector",
                    "exact": geometry.sector_measure(n, float(region.T), float(region.cap.r), "exact"),
                    "leading": geometry.sector_measure(n, float(region.T), float(region.cap.r), "leading"),
                }
            else:
                payload = {
                    "kind": "approx-region",
                    "quadrature": region.measure(n, mode="quadrature"),
                    "leading": region.measure(n, mode="leading"),
                }
            payload["manifest"] = make_manifest(argv, None, None, threads, started)
            _emit(payload, args.out)
            return 0

        if args.cmd == "valdist":
            return _cmd_valdist(args, argv, threads, started)

        if args.cmd == "spectral":
            a, b = (float(x) for x in args.rho.split(","))
            f = spectral.SeparableFunction(args.n, ((a, b),), args.cap_r)
            M, tail = spectral.m_ff(f, f, args.s, d_max=args.dmax)
            payload = {
                "M": M,
                "tail_bound": tail,
                "manifest": make_manifest(argv, None, None, threads, started),
            }
            _emit(payload, args.out)
            return 0

        if args.cmd == "experiment":
            with open(args.config, "r", encoding="utf-8") as fh:
                cfg = exper.parse_config_text(fh.read())
            if args.seed is not None:
                cfg.seed = args.seed
            elif cfg.seed == 0:
                cfg.seed = _resolve_seed(None)
            if args.threads is not None:
                cfg.threads = args.threads
            result = exper.run_experiment(cfg)
            os.makedirs(args.out, exist_ok=True)
            with open(os.path.join(args.out, "trials.csv"), "w", encoding="utf-8", newline="\n") as fh:
                fh.write(exper.rows_to_csv(result.rows))
            fit_payload = {
                "fits": {k: f.as_dict() for k, f in result.fits.items()},
                "frozen_constants": result.frozen,
                "summary": result.summary,
                "manifest": make_manifest(argv, cfg.seed, _try_form(cfg), cfg.threads, started),
            }
            with open(os.path.join(args.out, "fit.json"), "w", encoding="utf-8") as fh:
                fh.write(json.dumps(fit_payload, indent=2, default=float) + "\n")
            with open(os.path.join(args.out, "verdict.txt"), "w", encoding="utf-8", newline="\n") as fh:
                fh.write(exper.verdict_text(result))
            print(exper.verdict_text(result), end="")
            return 0 if result.passed else 2

        if args.cmd == "constants":
            n = args.n
            table = predicted_exponents(n)
            payload = {
                "n": n,
                "c_cap": geometry.c_cap(n),
                "exponents": table.as_dict(),
                "c_nm": {str(m): valdist.c_nm(n, m) for m in range(1, n)},
                "manifest": make_manifest(argv, None, None, threads, started),
            }
            _emit(payload, args.out)
            return 0
    except SystemExit as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 1


def _try_form(cfg):
    try:
        return cfg.form_obj()
    except Exception:
        return None


def _cmd_valdist(args, argv, threads, started) -> int:
    n, m = args.n, args.m
    rng_g = grp.rng_from_seed(int(args.g.split(":", 1)[1])) if args.g.startswith("random:") else None
    rng_h = grp.rng_from_seed(int(args.h.split(":", 1)[1])) if args.h.startswith("random:") else None
    g = grp.identity(n)
    if rng_g is not None:
        for i in range(6):
            ix = i % 3
            if ix == 0:
                g = g @ grp.iwasawa_u(0.2 * rng_g.standard_normal(n))
            elif ix == 1:
                g = g @ grp.iwasawa_a(math.exp(0.2 * (2 * rng_g.random() - 1)), n)
            else:
                g = g @ grp.rotation_k(grp.haar_so(n + 1, rng_g))
    h = np.eye(m)
    if rng_h is not None:
        while True:
            h = rng_h.uniform(-1.0, 1.0, size=(m, m))
            if abs(np.linalg.det(h)) >= 0.1:
                break
    form = EllipsoidForm.standard(n)
    q_hi = int(math.floor(args.T / math.sqrt(2.0) + 1e-12))
    pts = primitive_points(form, q_hi)
    _, omega_hat, _ = estimate_kappa(form, q_hi, points=pts)
    kind, _, rest = args.target.partition(":")
    if args.kind == "linear":
        if kind != "box":
            raise SystemExit('linear valdist needs --target "box:lo:hi[,lo:hi...]"')
        box = valdist.Box(tuple(tuple(map(float, p.split(":"))) for p in rest.split(",")))
        L = valdist.LinearMapOnCone.from_classification(n, m, g=g, h=h)
        V, V_se = valdist.v_L(L, samples=200_000, seed=1)
        rep = valdist.count_linear(L, box, args.T, pts, omega_q=omega_hat, V_L=V)
        payload = rep.as_dict() | {"V_L": V, "V_L_stderr": V_se, "omega": omega_hat}
    else:
        if kind != "interval":
            raise SystemExit('homog valdist needs --target "interval:a,b"')
        a, b = (float(x) for x in rest.split(","))
        d = args.d if args.d is not None else 2.0
        p = (m + 1) // 2
        q = m - p
        F = valdist.HomogeneousFormOnCone.standard(n, m, d, p, q, g=g, h=h)
        V = V_se = None
        if d < m:
            V, V_se = valdist.v_F(F, samples=200_000, seed=1)
        rep = valdist.count_homog(F, (a, b), args.T, pts, omega_q=omega_hat, V_F=V)
        payload = rep.as_dict() | {"V_F": V, "V_F_stderr": V_se, "omega": omega_hat}
    payload["manifest"] = make_manifest(argv, None, form, threads, started)
    _emit(payload, args.out)
    return 0


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()

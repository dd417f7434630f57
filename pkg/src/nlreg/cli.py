"""Command line interface: solve, diagnose, verify.

Exit codes: 0 success, 1 verification failure, 2 config schema error,
3 solver failure, 4 grid mismatch between field and config.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .acceptance import SUITES, run_suite
from .config import ExperimentConfig, load_config
from .diagnostics import (boundary_growth, interior_growth, liouville_distance,
                          q_curve, quotient_regularity)
from .errors import (ConfigError, GridMismatch, MaxIterExceeded, NlregError,
                     NotPositiveDefinite)
from .fieldio import read_field, write_field
from .funcspace import eta_scaling_check
from .kernels import KernelSpec
from .report import DiagnosticsReport, ProbeResult
from .solver import DirichletProblem, assemble, caccioppoli_report, solve


def _build_problem(cfg: ExperimentConfig) -> DirichletProblem:
    return DirichletProblem(
        kernel=cfg.kernel, domain=cfg.domain, rhs=cfg.rhs, grid=cfg.grid,
        potential=cfg.potential, exterior_data=cfg.exterior_data,
        rhs_singularities=cfg.rhs_singularities)


def cmd_solve(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out_dir = Path(args.out) if args.out else cfg.output
    out_dir.mkdir(parents=True, exist_ok=True)
    log_lines = [f"experiment {cfg.name}", f"config {cfg.config_hash}",
                 f"seed {cfg.seed:#x}",
                 f"grid h={cfg.grid.h!r} nodes={cfg.grid.n_nodes()}"]
    try:
        system = assemble(_build_problem(cfg))
        field = solve(system, tol=cfg.solver_tol, max_iter=cfg.solver_max_iter)
        if cfg.exterior_data is not None:
            nodes = cfg.grid.nodes()
            d = np.atleast_1d(cfg.domain.dist(nodes))
            vals = field.values.ravel().copy()
            ext = d <= 1e-12
            vals[ext] = np.asarray(cfg.exterior_data(nodes[ext]), dtype=float)
            from .funcspace import DiscreteField
            field = DiscreteField(cfg.grid, vals.reshape(cfg.grid.shape),
                                  field.far_field)
    except (NotPositiveDefinite, MaxIterExceeded) as exc:
        print(f"solver failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 3
    except NlregError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    paths = write_field(field, out_dir / f"{cfg.name}.field")
    log_lines.append(f"active nodes {system.active_index.size}")
    log_lines.append("field " + " ".join(p.name for p in paths))
    (out_dir / f"{cfg.name}.solve.log").write_text("\n".join(log_lines) + "\n")
    print(f"wrote {paths[0]} and {paths[1]}")
    return 0


def _run_probe(i, spec, cfg, field):
    kind = spec["kind"]
    h = cfg.grid.h
    name = spec.get("name", f"{kind}-{i}")
    s = cfg.kernel.s
    if kind == "boundary_growth":
        n = int(spec.get("n_radii", 6))
        radii = [spec.get("radii_min_cells", 4) * h * 2 ** k for k in range(n)]
        pts = spec.get("points")
        if pts is None and cfg.domain.variant == "interval":
            pts = [[cfg.domain.a], [cfg.domain.b]]
        probe = boundary_growth(field, cfg.domain, pts, radii,
                                predicted=spec.get("predicted"))
        return ProbeResult(
            name=name, kind=kind, verdict=probe.verdict,
            anchor="boundary L2 mass growth exponent",
            numbers={"alpha": probe.fitted_alpha,
                     "predicted": spec.get("predicted"),
                     "residual": probe.residual},
            curve=probe.curve(), note=probe.note)
    if kind == "interior_growth":
        n = int(spec.get("n_radii", 6))
        radii = [spec.get("radii_min_cells", 4) * h * 2 ** k for k in range(n)]
        centers = spec.get("centers")
        if centers is None:
            raise ConfigError(f"probes[{i}].centers", "interior probe needs centers")
        probe = interior_growth(field, centers, radii, domain=cfg.domain,
                                s=s, predicted=spec.get("predicted"))
        return ProbeResult(
            name=name, kind=kind, verdict=probe.verdict,
            anchor="interior L2 oscillation growth exponent",
            numbers={"alpha": probe.fitted_alpha,
                     "predicted": spec.get("predicted"),
                     "residual": probe.residual},
            curve=probe.curve(), note=probe.note)
    if kind == "quotient":
        width = float(spec.get("strip_width", 0.5))
        scales = spec.get("fit_scales")
        collar = int(spec.get("collar_cells", 2))
        out = quotient_regularity(field, cfg.domain, s, width,
                                  collar_cells=collar, fit_scales=scales)
        predicted = spec.get("predicted")
        exp = out["holder"].exponent
        verdict = "PASS" if (predicted is None or exp >= predicted) else "FAIL"
        psi_min = min(out["psi"].values())
        return ProbeResult(
            name=name, kind=kind, verdict=verdict,
            anchor="Hoelder continuity of u/dist^s up to the boundary",
            numbers={"holder_exponent": exp, "predicted": predicted,
                     "psi_min": psi_min})
    if kind == "q_curve":
        z = spec.get("z")
        if z is None:
            raise ConfigError(f"probes[{i}].z", "q_curve needs a boundary point")
        n = int(spec.get("n_radii", 5))
        radii = [spec.get("radii_min_cells", 8) * h * 2 ** k for k in range(n)]
        out = q_curve(field, cfg.domain, z, radii, s)
        return ProbeResult(
            name=name, kind=kind, verdict="PASS",
            anchor="profile projection coefficient curve",
            numbers={"value_slope": out["value_slope"],
                     "cauchy_slope": out["cauchy_slope"]},
            curve=list(zip(out["radii"].tolist(), out["q_values"].tolist())))
    if kind == "liouville":
        target = spec.get("target", "affine")
        region = None
        if cfg.domain.variant == "interval":
            region = ("box", [cfg.domain.a], [cfg.domain.b])
        dist = liouville_distance(field, target, s=s, region=region)
        budget = float(spec.get("budget", 0.05))
        return ProbeResult(
            name=name, kind=kind,
            verdict="PASS" if dist <= budget else "FAIL",
            anchor="rigidity distance to the declared family",
            numbers={"distance": dist, "budget": budget})
    if kind == "eta_scaling":
        beta = float(spec.get("beta", 0.3))
        radii = [2.0 ** (-k) for k in range(int(spec.get("n_radii", 8)))]
        out = eta_scaling_check(cfg.rhs, beta, s, np.zeros(cfg.dimension),
                                radii,
                                singularities=list(cfg.rhs_singularities))
        target = 2 * s - beta
        good = abs(out["slope"] - target) <= float(spec.get("tolerance", 0.05))
        return ProbeResult(
            name=name, kind=kind, verdict="PASS" if good else "FAIL",
            anchor="Kato modulus scaling exponent of the zoomed data",
            numbers={"slope": out["slope"], "target": target},
            curve=list(zip(out["radii"].tolist(), out["eta_values"].tolist())))
    if kind == "caccioppoli":
        rep = caccioppoli_report(field, cfg.kernel, cfg.rhs,
                                 R=float(spec.get("radius", 0.5)),
                                 eps=float(spec.get("eps", 0.5)))
        return ProbeResult(
            name=name, kind=kind,
            verdict="PASS" if rep["ratio"] <= 1.0 else "FAIL",
            anchor="cutoff energy inequality",
            numbers={"lhs": rep["lhs"], "rhs": rep["rhs"],
                     "ratio": rep["ratio"]})
    raise ConfigError(f"probes[{i}].kind", f"unhandled probe kind {kind!r}")


def cmd_diagnose(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        field = read_field(args.field)
    except (OSError, ValueError) as exc:
        print(f"cannot read field: {exc}", file=sys.stderr)
        return 4
    if (field.grid.dim != cfg.grid.dim
            or abs(field.grid.h - cfg.grid.h) > 1e-12
            or not np.allclose(field.grid.lo, cfg.grid.lo)
            or not np.allclose(field.grid.hi, cfg.grid.hi)):
        print("grid mismatch between field and config", file=sys.stderr)
        return 4
    jobs = list(enumerate(cfg.probes))
    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            futures = [(i, pool.submit(_run_probe, i, spec, cfg, field))
                       for i, spec in jobs]
            results = [f.result() for _, f in sorted(futures, key=lambda t: t[0])]
    else:
        results = [_run_probe(i, spec, cfg, field) for i, spec in jobs]
    seed = int(args.seed, 16) if args.seed else cfg.seed
    report = DiagnosticsReport(experiment=cfg.name,
                               config_hash=cfg.config_hash,
                               seed=seed, probes=results)
    out_dir = Path(args.out) if args.out else cfg.output
    written = report.write(out_dir)
    print(report.to_text())
    print("wrote " + " ".join(str(p) for p in written))
    return 0 if report.verdict() != "FAIL" else 1


def cmd_verify(args) -> int:
    suite = args.suite
    if suite not in SUITES:
        print(f"unknown suite {suite!r}; choose from {sorted(SUITES)}",
              file=sys.stderr)
        return 2
    if args.inject == "broken-kernel-symmetry":
        # harness self-test: an asymmetric kernel must trip the swap check
        from .kernels import KernelSpec as KS

        def broken(x, y):
            x = np.asarray(x)
            y = np.asarray(y)
            r = np.sqrt(np.sum((x - y) ** 2, axis=-1))
            return (1.0 + 0.2 * np.sign(x[..., 0] - y[..., 0])) * r ** (-2.0)

        K = KS.general(0.5, 1, broken)
        rng = np.random.default_rng(0x5EED)
        xs = rng.uniform(-1, 1, size=(64, 1))
        ys = rng.uniform(-1, 1, size=(64, 1))
        sym = np.max(np.abs(K.eval(xs, ys) - K.eval(ys, xs)))
        if sym > 1e-12:
            print("FAIL kernel swap symmetry: injected kernel violates "
                  f"K(x,y) = K(y,x) by {sym:.3g}  "
                  "[violated: kernel swap symmetry]")
            return 1
        print("injection failed to break symmetry")
        return 2
    results = run_suite(suite)
    failed = [r for r in results if not r.passed]
    if failed:
        print("\nfailed criteria:")
        for r in failed:
            print(f"  {r.criterion}: {r.anchor}")
        return 1
    print(f"\nsuite {suite}: all {len(results)} criteria PASS")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nlreg",
        description="Nonlocal Dirichlet solver and regularity diagnostics")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve the configured problem")
    p_solve.add_argument("--config", required=True)
    p_solve.add_argument("--out", default=None)
    p_solve.add_argument("--threads", type=int, default=1)
    p_solve.add_argument("--seed", default=None, help="hex seed override")
    p_solve.set_defaults(fn=cmd_solve)

    p_diag = sub.add_parser("diagnose", help="run the probe plan on a field")
    p_diag.add_argument("--config", required=True)
    p_diag.add_argument("--field", required=True,
                        help="base path of a stored field (without .yaml/.bin)")
    p_diag.add_argument("--out", default=None)
    p_diag.add_argument("--threads", type=int, default=1)
    p_diag.add_argument("--seed", default=None, help="hex seed override")
    p_diag.set_defaults(fn=cmd_diagnose)

    p_ver = sub.add_parser("verify", help="run an acceptance suite")
    p_ver.add_argument("suite", choices=sorted(SUITES), nargs="?",
                       default="all")
    p_ver.add_argument("--threads", type=int, default=1)
    p_ver.add_argument("--seed", default=None)
    p_ver.add_argument("--inject", default=None,
                       help="harness self-test fault injection")
    p_ver.set_defaults(fn=cmd_verify)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())

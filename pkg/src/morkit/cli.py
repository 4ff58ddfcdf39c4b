"""Command-line front end for the reduction toolkit.

Subcommands cover the certified thermal-block reduction, the empirical
interpolation demos, the active-subspace demo, geometry morphing of point
cloud files, and reduced-model serialization. All runs are deterministic
under a fixed ``--seed``.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import active_subspaces as asub
from . import certification, fom, interpolation, morphing, rb


def _apply_thread_limit():
    """Honor MOR_THREADS by capping the BLAS/OpenMP thread pools."""
    raw = os.environ.get("MOR_THREADS")
    if not raw:
        return
    try:
        n = int(raw)
    except ValueError:
        print(f"warning: ignoring non-integer MOR_THREADS={raw!r}", file=sys.stderr)
        return
    if n <= 0:  # zero means automatic sizing
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, str(n))
    try:
        import threadpoolctl

        threadpoolctl.threadpool_limits(n)
    except ImportError:
        pass


def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise _DescriptorError(path, exc.lineno, exc.msg)
    except OSError as exc:
        raise _DescriptorError(path, 0, str(exc))
    if not isinstance(cfg, dict):
        raise _DescriptorError(path, 1, "top-level value must be an object")
    return cfg


class _DescriptorError(Exception):
    """Malformed JSON descriptor or config, with a line-numbered message."""

    def __init__(self, path, lineno, msg):
        super().__init__(f"{path}:{lineno}: {msg}")


def _resolve(args, cfg, key, default):
    """Flag > config file > built-in default."""
    val = getattr(args, key.replace("-", "_"), None)
    if val is not None:
        return val
    if key in cfg:
        return cfg[key]
    return default


def _out_dir(args, cfg, default):
    out = _resolve(args, cfg, "out", default)
    os.makedirs(out, exist_ok=True)
    return out


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


# ---------------------------------------------------------------------------
# subcommands


def _run_thermal_block(args, cfg):
    grid = int(_resolve(args, cfg, "grid", 32))
    train_size = int(_resolve(args, cfg, "train-size", 50))
    tol = float(_resolve(args, cfg, "tol", 1e-6))
    n_max = int(_resolve(args, cfg, "n-max", 15))
    out = _out_dir(args, cfg, "thermal_block_out")

    system = fom.assemble_thermal_block(n=grid)
    training = list(system.domain.uniform_grid(train_size))
    model = certification.build_coercivity_model(
        system, np.array([0.5]), check_terms=False
    )
    estimator = certification.CertifiedErrorEstimator(model=model)
    basis = rb.greedy(system, training, tol=tol, mu1=np.array([0.5]),
                      n_max=n_max, estimator=estimator)

    romsys = rb.project(system, basis)
    offline = certification.riesz_offline(system, basis)

    # per-iteration history with the true worst-case error for reference
    history_rows = []
    for size, max_delta in basis.history:
        history_rows.append((size, max_delta, np.nan))
    errors = []
    for mu in training:
        truth = fom.fom_solve(system, mu)
        u_n, _ = rb.rom_solve(romsys, mu)
        e = truth.coefficients - rb.lift(basis, u_n)
        errors.append(system.gram_norm(e))
    history_rows[-1] = (basis.size, basis.history[-1][1], max(errors))
    _write_csv(os.path.join(out, "greedy_history.csv"),
               "N,max_delta,max_true_error", history_rows)

    sweep = []
    for mu in system.domain.uniform_grid(20):
        truth = fom.fom_solve(system, mu)
        u_n, s_n = rb.rom_solve(romsys, mu)
        d_en, d_s = certification.error_bounds(offline, model, system, romsys, mu)
        e = truth.coefficients - rb.lift(basis, u_n)
        err = system.gram_norm(e)
        eff = d_en / err if err > 0 else np.inf
        sweep.append((float(mu[0]), d_en, err, eff, d_s))
    certification.export_bound_sweep(os.path.join(out, "bound_sweep.csv"), sweep)

    rb.save_rom(romsys, os.path.join(out, "rom"))
    print(f"basis size {basis.size}, final max bound {basis.history[-1][1]:.3e}")
    print(f"outputs written to {out}")
    return 0


def _run_eim_demo(args, cfg):
    grid = int(_resolve(args, cfg, "grid", 24))
    train_size = int(_resolve(args, cfg, "train-size", 100))
    tol = float(_resolve(args, cfg, "tol", 1e-12))
    n_max = int(_resolve(args, cfg, "n-max", 25))
    seed = int(_resolve(args, cfg, "seed", 42))
    out = _out_dir(args, cfg, "eim_out")

    system, forcing = fom.assemble_gaussian_poisson(n=grid)
    points = system.meta["all_nodes"]
    params = system.domain.sample(train_size, seed)
    values = np.column_stack([forcing(points, mu) for mu in params])
    samples = interpolation.FunctionSamples(values=values, points=points,
                                            parameters=list(params))
    basis = interpolation.eim_build(samples, tol=tol, n_max=n_max)

    _write_csv(os.path.join(out, "eim_history.csv"), "q,epsilon",
               [(q + 1, e) for q, e in enumerate(basis.error_history)])
    interpolation.export_eim_basis(basis, out, points=points)

    # reduced solves with the interpolated forcing against the full solves
    test_params = system.domain.sample(10, seed + 1)
    q_use = min(11, basis.size)
    sub = interpolation.EimBasis(
        basis=basis.basis[:, :q_use],
        magic_indices=basis.magic_indices[:q_use],
        interp_matrix=basis.interp_matrix[:q_use, :q_use],
        error_history=basis.error_history[:q_use],
        selected_parameter_indices=basis.selected_parameter_indices[:q_use],
    )
    rows = []
    for mu in test_params:
        exact = fom.solve_gaussian_poisson(system, mu)
        g_at_magic = forcing(points[sub.magic_indices], mu)
        g_interp = interpolation.eim_interpolate(sub, g_at_magic)
        f = fom.gaussian_poisson_load(system, g_interp)
        import scipy.sparse.linalg as spla
        import scipy.sparse as sp

        u = spla.spsolve(sp.csc_matrix(system.assemble_matrix(mu)), f)
        err = system.gram_norm(u - exact.coefficients)
        rows.append((float(mu[0]), float(mu[1]), err))
    _write_csv(os.path.join(out, "interp_solve_error.csv"), "mu_1,mu_2,error", rows)
    print(f"interpolation basis size {basis.size}, outputs written to {out}")
    return 0


def _run_deim_demo(args, cfg):
    grid = int(_resolve(args, cfg, "grid", 12))
    train_size = int(_resolve(args, cfg, "train-size", 30))
    seed = int(_resolve(args, cfg, "seed", 42))
    out = _out_dir(args, cfg, "deim_out")

    problem = fom.NonlinearFom(n=grid)
    params = problem.domain.sample(train_size, seed)
    a_snaps = []
    c_snaps = []
    sol_snaps = []
    for mu in params:
        u = fom.nonlinear_solve(problem, mu)
        a, c = problem.operator_snapshot(u, mu)
        a_snaps.append(a)
        c_snaps.append(c)
        sol_snaps.append(u)

    rows = []
    test_mu = problem.domain.sample(5, seed + 1)
    for n_terms in (2, 4, 6, 8, 10):
        a_basis = interpolation.mdeim_build(a_snaps, tol=0.0, n_max=n_terms)
        c_basis = interpolation.mdeim_build(c_snaps, tol=0.0, n_max=n_terms)
        errs = []
        for mu in test_mu:
            u = fom.nonlinear_solve(problem, mu)
            a, c = problem.operator_snapshot(u, mu)
            a_rec = interpolation.mdeim_reconstruct(a_basis, a)
            c_rec = interpolation.mdeim_reconstruct(c_basis, c)
            num = (np.linalg.norm(a.toarray() - a_rec)
                   + np.linalg.norm(c.toarray() - c_rec))
            den = np.linalg.norm(a.toarray()) + np.linalg.norm(c.toarray())
            errs.append(num / den)
        rows.append((n_terms, max(errs)))
    _write_csv(os.path.join(out, "mdeim_decay.csv"), "n_terms,max_error", rows)
    print(f"operator interpolation decay written to {out}")
    return 0


def _run_asub_demo(args, cfg):
    train_size = int(_resolve(args, cfg, "train-size", 2000))
    seed = int(_resolve(args, cfg, "seed", 42))
    out = _out_dir(args, cfg, "asub_out")

    domain = fom.ParamDomain([-1.0, -1.0, -1.0], [1.0, 1.0, 1.0])
    samples = asub.sample_gradients(
        asub.quadratic_form, domain, train_size, seed, grad=asub.quadratic_form_grad
    )
    subspace = asub.estimate_subspace(samples)
    asub.export_eigenvalues_csv(os.path.join(out, "eigenvalues.csv"), subspace)
    asub.export_summary_csv(os.path.join(out, "summary.csv"), subspace, samples)
    print(
        f"active dimension {subspace.active_dim}, "
        f"gap ratio {subspace.gap_ratio:.3g}, outputs written to {out}"
    )
    return 0


def _run_morph(args, cfg):
    out = _resolve(args, cfg, "out", "deformed_points.txt")
    descriptor_path = args.descriptor
    try:
        descriptor = _load_json_descriptor(descriptor_path)
        if descriptor.get("type") not in (None, args.kind):
            raise _DescriptorError(
                descriptor_path, 1,
                f"descriptor type {descriptor.get('type')!r} does not match "
                f"subcommand {args.kind!r}",
            )
        descriptor["type"] = args.kind
        morph = morphing.morph_from_descriptor(descriptor)
    except morphing.MorphBuildError as exc:
        raise _DescriptorError(descriptor_path, 1, str(exc))
    try:
        points = morphing.read_point_cloud(args.points)
    except ValueError as exc:
        raise _DescriptorError(args.points, 0, str(exc))
    deformed = morphing.deform(morph, points)
    morphing.write_point_cloud(out, deformed)
    disp = np.linalg.norm(deformed - points, axis=1)
    summary = {
        "points": int(points.shape[0]),
        "max_displacement": float(disp.max()) if disp.size else 0.0,
        "output": out,
    }
    print(json.dumps(summary, indent=2))
    return 0


def _load_json_descriptor(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise _DescriptorError(path, exc.lineno, exc.msg)
    except OSError as exc:
        raise _DescriptorError(path, 0, str(exc))


def _run_rom(args, cfg):
    if args.action == "save":
        return _run_thermal_block(args, cfg)
    directory = args.model_dir
    try:
        romsys = rb.load_rom(directory)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        lineno = getattr(exc, "lineno", 0)
        raise _DescriptorError(directory, lineno, str(exc))
    if args.action == "load":
        print(
            f"reduced model of size {romsys.size} "
            f"(q_a={len(romsys.reduced_matrix_terms)}, "
            f"q_f={len(romsys.reduced_rhs_terms)}, theta={romsys.theta_name})"
        )
        return 0
    # solve
    mu = np.array([float(v) for v in args.mu])
    u_n, s_n = rb.rom_solve(romsys, mu)
    print(f"s_N({mu.tolist()}) = {s_n:.17g}")
    out = _resolve(args, cfg, "out", None)
    if out:
        _write_csv(out, "index,coefficient",
                   [(k + 1, v) for k, v in enumerate(u_n)])
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(p):
    p.add_argument("--grid", type=int, default=None,
                   help="full-order grid resolution per direction")
    p.add_argument("--train-size", type=int, default=None,
                   help="training sample count")
    p.add_argument("--tol", type=float, default=None, help="stopping tolerance")
    p.add_argument("--n-max", type=int, default=None, help="maximum basis size")
    p.add_argument("--seed", type=int, default=None,
                   help="random seed (default 42)")
    p.add_argument("--out", default=None, help="output directory or file")
    p.add_argument("--config", default=None,
                   help="JSON config file; explicit flags take precedence")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="morkit",
        description="Projection-based model reduction toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("thermal-block",
                       help="certified greedy reduction of the two-material block")
    _add_common(p)
    p.set_defaults(func=_run_thermal_block)

    p = sub.add_parser("eim-demo",
                       help="empirical interpolation of a parametrized source")
    _add_common(p)
    p.set_defaults(func=_run_eim_demo)

    p = sub.add_parser("deim-demo",
                       help="operator interpolation on the nonlinear problem")
    _add_common(p)
    p.set_defaults(func=_run_deim_demo)

    p = sub.add_parser("asub-demo", help="active subspace of a quadratic model")
    _add_common(p)
    p.set_defaults(func=_run_asub_demo)

    p = sub.add_parser("morph", help="deform a point cloud file")
    p.add_argument("kind", choices=("ffd", "rbf", "idw"))
    p.add_argument("points", help="whitespace-delimited point cloud file")
    p.add_argument("descriptor", help="JSON morph descriptor")
    _add_common(p)
    p.set_defaults(func=_run_morph)

    p = sub.add_parser("rom", help="reduced model serialization")
    p.add_argument("action", choices=("save", "load", "solve"))
    p.add_argument("model_dir", nargs="?", default=None,
                   help="model directory (load/solve)")
    p.add_argument("--mu", nargs="+", default=None,
                   help="parameter point (solve)")
    _add_common(p)
    p.set_defaults(func=_run_rom)

    return parser


def main(argv=None):
    _apply_thread_limit()
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "rom" and args.action in ("load", "solve") and not args.model_dir:
        parser.error("rom load/solve requires a model directory")
    if args.command == "rom" and args.action == "solve" and not args.mu:
        parser.error("rom solve requires --mu")
    try:
        cfg = _load_config(args.config)
        seed = _resolve(args, cfg, "seed", 42)
        args.seed = int(seed)
        return args.func(args, cfg)
    except _DescriptorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

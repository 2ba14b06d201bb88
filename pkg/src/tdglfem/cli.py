"""Experiment drivers and bit-stable file outputs.

Subcommands
-----------
run          one scheme on one mesh; writes diagnostics.csv and errors.csv
study        convergence study over a mesh list; writes rates.csv
compare      both schemes at the same resolution; writes compare.csv
export-mesh  legacy VTK dump of the structured L-shape mesh

Exit codes: 0 success, 2 configuration error, 3 solver failure,
4 acceptance-check failure (only with --check).

All values are printed with 17 significant digits and no run metadata, so
two runs with identical configuration produce byte-identical files.  The
manufactured corner-singular case drives every run; its eta=1, kappa=10
are the defaults but remain configurable for experiments.

The direct scheme has no u, v unknowns; its e_u_H1/e_v_H1 columns (and the
grad_u/grad_v diagnostics) are written as 0.
"""

import argparse
import csv
import json
import os
import sys
from dataclasses import asdict, dataclass, fields

from . import direct_tdgl, hodge_tdgl, manufactured, metrics, vtk_io
from .hodge_tdgl import SchemeConfig
from .mesh import build_l_shape_mesh
from .sparse_linalg import SolverFailure

ERRORS_HEADER = "h,tau,scheme,e_psi_L2,e_mod_psi_L2,e_A_L2,e_u_H1,e_v_H1"
DIAG_HEADER = ("step,t,psi_L2,grad_u_L2,grad_v_L2,solver_iters_psi,"
               "solver_iters_p,solver_iters_q,solver_iters_u,solver_iters_v")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Validated run configuration; mirrors the JSON config schema."""

    scheme: str = "hodge"
    M: int = 16
    tau: float = None
    tau_rule: str = None
    T: float = 1.0
    eta: float = 1.0
    kappa: float = 10.0
    output_dir: str = "."
    export_fields: bool = False
    export_matrices: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.scheme not in ("hodge", "direct"):
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.tau is None and self.tau_rule is None:
            self.tau_rule = "equal_h"
        if self.tau_rule is not None and self.tau_rule != "equal_h":
            raise ConfigError(f"unknown tau_rule {self.tau_rule!r}")
        if self.tau is not None and self.tau_rule is not None:
            raise ConfigError("give either tau or tau_rule, not both")

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        with open(path) as fp:
            return cls.from_dict(json.load(fp))

    def resolved_tau(self) -> float:
        return 1.0 / self.M if self.tau is None else self.tau

    def scheme_config(self) -> SchemeConfig:
        try:
            return SchemeConfig(eta=self.eta, kappa=self.kappa,
                                tau=self.resolved_tau(), T=self.T, M=self.M)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


def _fmt(x) -> str:
    return f"{x:.17g}" if isinstance(x, float) else str(x)


def write_csv(path, header: str, rows) -> None:
    with open(path, "w", newline="") as fp:
        fp.write(header + "\n")
        for row in rows:
            fp.write(",".join(_fmt(v) for v in row) + "\n")


def read_csv(path):
    """Round-trip reader: header list plus rows with numeric fields parsed."""
    with open(path, newline="") as fp:
        reader = csv.reader(fp)
        header = next(reader)
        rows = []
        for raw in reader:
            row = []
            for item in raw:
                try:
                    row.append(float(item))
                except ValueError:
                    row.append(item)
            rows.append(row)
    return header, rows


def _error_row(cfg: RunConfig, state, scheme: str) -> metrics.ErrorRow:
    T = cfg.T
    if scheme == "hodge":
        e_u = metrics.h1_error_scalar(state.u, manufactured.exact_u,
                                      manufactured.exact_grad_u, T)
        e_v = metrics.h1_error_scalar(state.v, manufactured.exact_v,
                                      manufactured.exact_grad_v, T)
        e_A = metrics.l2_error_vector(state.A, manufactured.exact_A, T)
    else:
        e_u = e_v = 0.0
        e_A = metrics.l2_error_vector((state.psi.mesh, state.A),
                                      manufactured.exact_A, T)
    return metrics.ErrorRow(
        h=1.0 / cfg.M,
        tau=cfg.resolved_tau(),
        scheme=scheme,
        e_psi_L2=metrics.l2_error_scalar(state.psi, manufactured.exact_psi, T),
        e_mod_psi_L2=metrics.l2_error_scalar(state.psi, manufactured.exact_psi,
                                             T, modulus=True),
        e_A_L2=e_A,
        e_u_H1=e_u,
        e_v_H1=e_v,
    )


def _row_tuple(row: metrics.ErrorRow):
    d = asdict(row)
    return tuple(d[k] for k in ERRORS_HEADER.split(","))


def _export_fields(cfg: RunConfig, mesh, state, scheme: str) -> None:
    import numpy as np

    path = os.path.join(cfg.output_dir, f"fields_{scheme}.vtk")
    if scheme == "hodge":
        point = {
            "psi_abs": np.abs(state.psi.coeffs),
            "p": state.p.coeffs,
            "q": state.q.coeffs,
            "u": state.u.coeffs,
            "v": state.v.coeffs,
        }
        cell = {"A_x": state.A.values[:, 0], "A_y": state.A.values[:, 1]}
    else:
        point = {
            "psi_abs": np.abs(state.psi.coeffs),
            "A_x": state.A[:, 0],
            "A_y": state.A[:, 1],
        }
        cell = None
    vtk_io.write_vtk(path, mesh, point_data=point, cell_data=cell,
                     title=f"{scheme} final state")


def _export_matrices(cfg: RunConfig, mesh, state) -> None:
    from . import fem
    from .sparse_linalg import export_matrix_market

    scfg = cfg.scheme_config()
    space = fem.as_space(mesh)
    export_matrix_market(os.path.join(cfg.output_dir, "mass.mtx"),
                         fem.assemble_mass(space))
    export_matrix_market(os.path.join(cfg.output_dir, "stiffness.mtx"),
                         fem.assemble_stiffness(space))
    if cfg.scheme == "hodge":
        A_sys, _ = fem.assemble_psi_system(
            space, state.psi, state.A, scfg.eta, scfg.kappa, scfg.tau)
        export_matrix_market(os.path.join(cfg.output_dir, "psi_system.mtx"),
                             A_sys)


def cmd_run(cfg: RunConfig):
    """Execute one run; returns (ErrorRow, diagnostics)."""
    scfg = cfg.scheme_config()
    case = manufactured.ManufacturedCase(eta=cfg.eta, kappa=cfg.kappa)
    mesh = build_l_shape_mesh(cfg.M)
    if cfg.scheme == "hodge":
        state, diags = hodge_tdgl.run(scfg, case, mesh)
    else:
        state, diags = direct_tdgl.direct_run(scfg, case, mesh)

    os.makedirs(cfg.output_dir, exist_ok=True)
    write_csv(
        os.path.join(cfg.output_dir, "diagnostics.csv"), DIAG_HEADER,
        [(d.step, d.t, d.psi_L2, d.grad_u_L2, d.grad_v_L2,
          d.solver_iters_psi, d.solver_iters_p, d.solver_iters_q,
          d.solver_iters_u, d.solver_iters_v) for d in diags],
    )
    row = _error_row(cfg, state, cfg.scheme)
    write_csv(os.path.join(cfg.output_dir, "errors.csv"), ERRORS_HEADER,
              [_row_tuple(row)])
    if cfg.export_fields:
        _export_fields(cfg, mesh, state, cfg.scheme)
    if cfg.export_matrices:
        _export_matrices(cfg, mesh, state)
    return row, diags


def cmd_convergence_study(cfg: RunConfig, M_list, check: bool = False):
    """Run each M, write rates.csv, optionally enforce rate thresholds.

    The final row's h column holds the literal tag "rate"; its error
    columns hold the observed rates from the two finest meshes.
    """
    if sorted(M_list) != list(M_list):
        raise ConfigError("M list must be sorted ascending")
    rows = []
    for M in M_list:
        sub = RunConfig(**{**asdict(cfg), "M": M,
                           "output_dir": os.path.join(cfg.output_dir, f"M{M}")})
        row, _ = cmd_run(sub)
        rows.append(row)

    out = [_row_tuple(r) for r in rows]
    rates = None
    if len(rows) >= 2:
        a, b = rows[-2], rows[-1]
        rates = {
            "psi": metrics.convergence_rate(a.e_psi_L2, b.e_psi_L2),
            "mod": metrics.convergence_rate(a.e_mod_psi_L2, b.e_mod_psi_L2),
            "A": metrics.convergence_rate(a.e_A_L2, b.e_A_L2),
            "u": metrics.convergence_rate(a.e_u_H1, b.e_u_H1),
            "v": metrics.convergence_rate(a.e_v_H1, b.e_v_H1),
        }
        out.append(("rate", "", cfg.scheme, rates["psi"], rates["mod"],
                    rates["A"], rates["u"], rates["v"]))
    else:
        print("study: single mesh given, no rate row computed", file=sys.stderr)
    os.makedirs(cfg.output_dir, exist_ok=True)
    write_csv(os.path.join(cfg.output_dir, "rates.csv"), ERRORS_HEADER, out)

    ok = True
    if check and rates is not None:
        if cfg.scheme == "hodge":
            ok = (rates["psi"] >= 0.85 and rates["mod"] >= 0.85
                  and rates["A"] >= 0.65)
        else:
            ok = rates["A"] <= 0.2 and rates["psi"] <= 0.3
    return rows, rates, ok


def cmd_compare(cfg: RunConfig, check: bool = False):
    """Run both schemes with identical resolution; emit combined CSV."""
    rows = []
    for scheme in ("hodge", "direct"):
        sub = RunConfig(**{**asdict(cfg), "scheme": scheme,
                           "output_dir": os.path.join(cfg.output_dir, scheme)})
        row, _ = cmd_run(sub)
        rows.append(row)
    os.makedirs(cfg.output_dir, exist_ok=True)
    write_csv(os.path.join(cfg.output_dir, "compare.csv"), ERRORS_HEADER,
              [_row_tuple(r) for r in rows])
    ok = (not check) or rows[0].e_A_L2 < rows[1].e_A_L2
    return rows, ok


def _add_config_args(p):
    p.add_argument("--config", help="JSON config file (overrides other flags)")
    p.add_argument("--scheme", choices=["hodge", "direct"], default="hodge")
    p.add_argument("-M", type=int, default=16, help="mesh parameter (even)")
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--tau-rule", dest="tau_rule", default=None,
                   choices=["equal_h"])
    p.add_argument("-T", type=float, default=1.0, help="final time")
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--kappa", type=float, default=10.0)
    p.add_argument("-o", "--output-dir", dest="output_dir", default=".")
    p.add_argument("--export-fields", action="store_true")
    p.add_argument("--export-matrices", action="store_true")
    p.add_argument("--seed", type=int, default=0)


def _config_from_args(args) -> RunConfig:
    if args.config:
        return RunConfig.from_json(args.config)
    return RunConfig(
        scheme=args.scheme, M=args.M, tau=args.tau, tau_rule=args.tau_rule,
        T=args.T, eta=args.eta, kappa=args.kappa, output_dir=args.output_dir,
        export_fields=args.export_fields,
        export_matrices=args.export_matrices, seed=args.seed,
    )


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="tdglfem",
        description="Superconductivity FEM solvers on the L-shaped domain",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="single run")
    _add_config_args(p_run)

    p_study = sub.add_parser("study", help="convergence study over meshes")
    _add_config_args(p_study)
    p_study.add_argument("--M-list", dest="M_list", type=int, nargs="+",
                         default=[16, 32, 64])
    p_study.add_argument("--check", action="store_true",
                         help="verify rate thresholds; exit 4 on failure")

    p_cmp = sub.add_parser("compare", help="hodge vs direct at one resolution")
    _add_config_args(p_cmp)
    p_cmp.add_argument("--check", action="store_true",
                       help="verify the hodge potential error is smaller")

    p_mesh = sub.add_parser("export-mesh", help="write the mesh as legacy VTK")
    p_mesh.add_argument("-M", type=int, default=16)
    p_mesh.add_argument("-o", "--output", default="mesh.vtk")

    args = parser.parse_args(argv)
    try:
        if args.command == "export-mesh":
            mesh = build_l_shape_mesh(args.M)
            vtk_io.write_vtk(args.output, mesh, title=f"L-shape mesh M={args.M}")
            return 0
        cfg = _config_from_args(args)
        if args.command == "run":
            row, _ = cmd_run(cfg)
            print(ERRORS_HEADER)
            print(",".join(_fmt(v) for v in _row_tuple(row)))
            return 0
        if args.command == "study":
            _, rates, ok = cmd_convergence_study(cfg, args.M_list,
                                                 check=args.check)
            if rates:
                print("observed rates:", {k: round(v, 4)
                                          for k, v in rates.items()})
            return 0 if ok else 4
        if args.command == "compare":
            rows, ok = cmd_compare(cfg, check=args.check)
            for row in rows:
                print(",".join(_fmt(v) for v in _row_tuple(row)))
            return 0 if ok else 4
    except (ConfigError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())

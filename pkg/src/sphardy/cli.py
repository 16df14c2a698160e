"""Command line front end.

Configuration is a flat ``key=value`` file (``--config``) overridden by flags
of the same names (``--n-trial 24``). ``SPHARDY_OUT`` overrides the output
directory. Exit codes: 0 success, 2 invalid configuration or input,
3 numerical failure, 4 invariant or membership failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .bep import estimate_mode, solve_bep1, solve_bep2, write_report
from .continuation import apply_t_plus_to_minus, generate_pair, graph_basis
from .errors import InternalConsistencyError, InvalidArgument, NotInDomain, NumericalFailure, PreconditionViolation
from .grid import grid_from_nodes, read_grid_field
from .harmonics import ScalarCoeffs, index
from .locality import build_context, off_sigma_subspace, sharmonic_subspace, svd_report
from .validation import run_validation

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_INVARIANT = 0, 2, 3, 4
# generated potentials satisfy the weak locality relation only to rounding, so
# the noise prior handed to the mode bound never drops below this (relative)
ROUNDOFF_FLOOR = 1e-10


@dataclass(frozen=True)
class RunConfig:
    n_trial: int = 24
    n_test: int = -1  # -1: floor(2 n_trial / 3)
    theta_c: float = float(np.pi / 3)
    eps: float = 1e-6
    nmax: int = 24  # degree for `validate`
    n_theta: int = 0  # 0: nmax + 2
    n_phi: int = 0  # 0: 2 nmax + 2
    noise: float = 1e-3
    tail_amplitude: float = 0.5
    c: float = 0.0  # 0: c_factor * ||T phi||
    c_factor: float = 1.1
    c_grid: str = "0.25,0.5,1,2,4"  # BEP1 sweep, multiples of ||T phi||
    c_h_grid: str = "1,10,100,1000,10000,100000"  # BEP2 bounds on ||h||
    modes: str = "1:-1,1:0,1:1,2:0,2:1,3:-2,3:0"
    seed: int = 0
    out_dir: str = "sphardy_out"

    def __post_init__(self):
        if self.n_trial < 1:
            raise InvalidArgument("n_trial must be >= 1")
        if self.n_test != -1 and not (1 <= self.n_test <= self.n_trial):
            raise InvalidArgument("need 1 <= n_test <= n_trial")
        if not (0.0 < self.theta_c < np.pi):
            raise InvalidArgument("theta_c must lie in (0, pi)")
        if not (0.0 < self.eps < 1.0):
            raise InvalidArgument("eps must lie in (0, 1)")
        if self.nmax < 0:
            raise InvalidArgument("nmax must be >= 0")
        if self.noise < 0 or self.tail_amplitude < 0 or self.c < 0 or self.c_factor <= 0:
            raise InvalidArgument("noise, tail_amplitude, c must be >= 0 and c_factor > 0")
        self.mode_list()
        self.grid_list(self.c_grid)
        self.grid_list(self.c_h_grid)

    @property
    def test_degree(self) -> int:
        return (2 * self.n_trial) // 3 if self.n_test == -1 else self.n_test

    def mode_list(self) -> list[tuple[int, int]]:
        out = []
        for tok in filter(None, self.modes.split(",")):
            try:
                n, m = (int(x) for x in tok.split(":"))
            except ValueError:
                raise InvalidArgument(f"bad mode {tok!r}; expected n:m") from None
            if not (0 <= n <= self.n_trial and -n <= m <= n):
                raise InvalidArgument(f"mode {tok!r} outside degree {self.n_trial}")
            out.append((n, m))
        return out

    @staticmethod
    def grid_list(text: str) -> list[float]:
        try:
            vals = [float(x) for x in text.split(",") if x.strip()]
        except ValueError:
            raise InvalidArgument(f"bad number list {text!r}") from None
        if not vals or min(vals) <= 0:
            raise InvalidArgument(f"bound grid {text!r} must be non-empty and positive")
        return vals

    def output_dir(self) -> Path:
        return Path(os.environ.get("SPHARDY_OUT") or self.out_dir)

    def dump(self) -> str:
        return "".join(f"{f.name}={getattr(self, f.name)!r}\n".replace("'", "") for f in dataclasses.fields(self))


def _coerce(name: str, value: str):
    typ = {f.name: f.type for f in dataclasses.fields(RunConfig)}[name]
    try:
        if typ == "int":
            return int(value)
        if typ == "float":
            return float(value)
    except ValueError:
        raise InvalidArgument(f"{name}: cannot parse {value!r} as {typ}") from None
    return value


def load_config(path: str | None, overrides: dict) -> RunConfig:
    values = {}
    known = {f.name for f in dataclasses.fields(RunConfig)}
    if path:
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidArgument(f"{path}:{lineno}: expected key=value")
            k, v = (s.strip() for s in line.split("=", 1))
            k = k.replace("-", "_")
            if k not in known:
                raise InvalidArgument(f"{path}:{lineno}: unknown key {k!r}")
            values[k] = _coerce(k, v)
    for k, v in overrides.items():
        if v is not None:
            values[k] = _coerce(k, str(v))
    return RunConfig(**values)


# -- output helpers -----------------------------------------------------------


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def write_csv(path: Path, rows: list[dict], fields: list[str]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(r.get(k, "")) for k in fields})


def _prepare_out(cfg: RunConfig) -> Path:
    out = cfg.output_dir()
    out.mkdir(parents=True, exist_ok=True)
    (out / "run_config.txt").write_text(cfg.dump())
    return out


def _context(cfg: RunConfig):
    ctx = build_context(cfg.theta_c, cfg.n_trial, cfg.test_degree, cfg.eps)
    if ctx.n_test >= ctx.n_trial:
        raise PreconditionViolation("n_test must be < n_trial: no discrete freedom off the cap")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        dim = sharmonic_subspace(ctx).dim
    if dim <= 1:
        raise PreconditionViolation(
            f"D_eps holds only constants at n_trial={cfg.n_trial}, eps={cfg.eps:g}; raise eps or n_trial"
        )
    return ctx


def _pair_and_data(cfg: RunConfig, ctx):
    rng = np.random.default_rng(cfg.seed)
    pair = generate_pair(ctx, rng, cfg.tail_amplitude)
    noise = rng.standard_normal(ctx.n_trial_coeffs)
    noise[0] = 0.0
    noise *= cfg.noise / np.linalg.norm(noise)
    return pair, pair.phi + noise


def _unit(ctx, n, m):
    e = np.zeros(ctx.n_trial_coeffs)
    e[index(n, m)] = 1.0
    return e


# -- commands ----------------------------------------------------------------


def cmd_validate(cfg: RunConfig, inject: str | None = None) -> int:
    corrupt = None
    if inject:
        try:
            name, deg, factor = inject.split(":")
            corrupt = (name, int(deg), float(factor))
        except ValueError:
            raise InvalidArgument(f"fault {inject!r} must be name:degree:factor") from None
        if name not in ("S", "K+", "K-") or not (0 <= corrupt[1] <= cfg.nmax):
            raise InvalidArgument(f"cannot corrupt {inject!r}")
    rows = run_validation(cfg.nmax, cfg.theta_c, seed=cfg.seed, corrupt=corrupt, n_theta=cfg.n_theta, n_phi=cfg.n_phi)
    out = _prepare_out(cfg)
    fields = ["check", "value", "tolerance", "pass"]
    write_csv(out / "validate.csv", rows, fields)
    w = csv.DictWriter(sys.stdout, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(r[k]) for k in fields})
    return EXIT_OK if all(r["pass"] for r in rows) else EXIT_INVARIANT


def cmd_decompose(cfg: RunConfig, path: str) -> int:
    from .hardy import decompose

    theta, phi, values = read_grid_field(path)
    if values.ndim != 2:
        raise InvalidArgument("decompose needs a vector field file (theta,phi,vx,vy,vz)")
    grid = grid_from_nodes(theta, phi)
    nmax = min(grid.n_theta - 2, (grid.n_phi - 1) // 2, cfg.nmax)
    if nmax < 0:
        raise InvalidArgument("grid too coarse to decompose")
    coeffs = decompose(values, grid, nmax)
    out = _prepare_out(cfg)
    (out / "decomposed.json").write_text(coeffs.to_json())
    print(f"nmax={nmax} |phi|={np.linalg.norm(coeffs.phi):.17g} |psi|={np.linalg.norm(coeffs.psi):.17g} "
          f"|chi|={np.linalg.norm(coeffs.chi):.17g}")
    return EXIT_OK


def cmd_pairgen(cfg: RunConfig) -> int:
    ctx = _context(cfg)
    pair = generate_pair(ctx, np.random.default_rng(cfg.seed), cfg.tail_amplitude)
    out = _prepare_out(cfg)
    (out / "pair.json").write_text(pair.to_json())
    (out / "phi.json").write_text(ScalarCoeffs(ctx.n_trial, pair.phi).to_json())
    print(f"locality_residual={pair.locality_residual:.3e} divfree_residual={pair.divfree_residual:.3e} "
          f"|phi|={np.linalg.norm(pair.phi):.6g} |psi|={np.linalg.norm(pair.psi):.6g}")
    return EXIT_OK


def cmd_continue(cfg: RunConfig, path: str) -> int:
    ctx = _context(cfg)
    d = json.loads(Path(path).read_text())
    phi = np.asarray(d["phi"] if "phi" in d else d["values"], dtype=float)
    if int(d["nmax"]) != ctx.n_trial:
        raise InvalidArgument(f"coefficients have nmax={d['nmax']}, config n_trial={ctx.n_trial}")
    res = apply_t_plus_to_minus(ctx, phi)
    out = _prepare_out(cfg)
    (out / "psi.json").write_text(ScalarCoeffs(ctx.n_trial, res.output).to_json())
    print(f"fit_residual={res.fit_residual:.3e} condition={res.condition:.3e}")
    return EXIT_OK


def _bep1_rows(cfg, ctx, pair, f):
    tnorm = float(np.linalg.norm(pair.psi))
    rows = []
    for k in cfg.grid_list(cfg.c_grid):
        c = k * tnorm
        sol = solve_bep1(ctx, f, c)
        rows.append(
            {
                "case": f"bep1:c={k:g}|psi*|",
                "c": c,
                "gamma_or_lambda": sol.multiplier,
                "saturated": sol.constraint_active,
                "objective": sol.objective,
                "residual": float(np.linalg.norm(sol.psi_c)) - c if sol.constraint_active else 0.0,
                "bound": c,
                "empirical_error": float(np.linalg.norm(sol.psi_c - pair.psi)),
            }
        )
    return rows


def cmd_bep1(cfg: RunConfig) -> int:
    ctx = _context(cfg)
    pair, f = _pair_and_data(cfg, ctx)
    out = _prepare_out(cfg)
    write_report(out / "bep1.csv", _bep1_rows(cfg, ctx, pair, f))
    return EXIT_OK


def _bep2_rows(cfg, ctx):
    rows = []
    for n, m in cfg.mode_list():
        e = _unit(ctx, n, m)
        for c in cfg.grid_list(cfg.c_h_grid):
            sol = solve_bep2(ctx, e, c)
            rows.append(
                {
                    "case": f"bep2:Y{n},{m}",
                    "c": c,
                    "gamma_or_lambda": sol.gamma,
                    "saturated": sol.saturated,
                    "objective": sol.residual,
                    "residual": sol.normal_eq_residual,
                    "bound": "",
                    "empirical_error": "",
                }
            )
    return rows


def cmd_bep2(cfg: RunConfig) -> int:
    ctx = _context(cfg)
    out = _prepare_out(cfg)
    write_report(out / "bep2.csv", _bep2_rows(cfg, ctx))
    return EXIT_OK


def _estimate_rows(cfg, ctx, pair, f):
    rows = []
    tnorm = float(np.linalg.norm(pair.psi))
    pnorm = float(np.linalg.norm(pair.phi))
    eps_prior = max(cfg.noise, ROUNDOFF_FLOOR * pnorm)
    for n, m in cfg.mode_list():
        e = _unit(ctx, n, m)
        # the bound is computable without the truth, so pick c_h minimising it
        best = None
        for ch in cfg.grid_list(cfg.c_h_grid):
            est = estimate_mode(ctx, f, e, ch, eps_prior, pnorm, tnorm)
            if best is None or est.bound < best[1].bound:
                best = (ch, est)
        ch, est = best
        truth = float(pair.psi @ e)
        rows.append({"n": n, "m": m, "c_h": ch, "truth": truth, "estimate": est.estimate,
                     "error": abs(est.estimate - truth), "bound": est.bound,
                     "within_bound": abs(est.estimate - truth) <= est.bound, "gamma": est.gamma, "L_e": est.residual})
    return rows


ESTIMATE_FIELDS = ["n", "m", "c_h", "truth", "estimate", "error", "bound", "within_bound", "gamma", "L_e"]


def cmd_estimate_mode(cfg: RunConfig) -> int:
    ctx = _context(cfg)
    pair, f = _pair_and_data(cfg, ctx)
    out = _prepare_out(cfg)
    rows = _estimate_rows(cfg, ctx, pair, f)
    write_csv(out / "estimate.csv", rows, ESTIMATE_FIELDS)
    return EXIT_OK if all(r["within_bound"] for r in rows) else EXIT_INVARIANT


SVD_FIELDS = ["ntrial", "ntest", "theta_c", "operator", "index", "sigma"]


def cmd_svd_report(cfg: RunConfig) -> int:
    ctx = _context(cfg)
    out = _prepare_out(cfg)
    write_csv(out / "svd.csv", svd_report(ctx), SVD_FIELDS)
    return EXIT_OK


DEMO_FIELDS = ["n", "m", "truth", "bep1", "bep1_error", "estimate", "estimate_error", "bound", "within_bound"]


def cmd_demo(cfg: RunConfig) -> int:
    ctx = _context(cfg)
    pair, f = _pair_and_data(cfg, ctx)
    out = _prepare_out(cfg)
    tnorm = float(np.linalg.norm(pair.psi))
    c = cfg.c if cfg.c > 0 else cfg.c_factor * tnorm
    sol = solve_bep1(ctx, f, c)
    est_rows = {(r["n"], r["m"]): r for r in _estimate_rows(cfg, ctx, pair, f)}
    rows = []
    for n, m in cfg.mode_list():
        i = index(n, m)
        r = est_rows[(n, m)]
        rows.append({"n": n, "m": m, "truth": pair.psi[i], "bep1": sol.psi_c[i],
                     "bep1_error": abs(sol.psi_c[i] - pair.psi[i]), "estimate": r["estimate"],
                     "estimate_error": r["error"], "bound": r["bound"], "within_bound": r["within_bound"]})
    write_csv(out / "demo_modes.csv", rows, DEMO_FIELDS)
    report = [{"case": "bep1:demo", "c": c, "gamma_or_lambda": sol.multiplier, "saturated": sol.constraint_active,
               "objective": sol.objective, "residual": 0.0, "bound": c,
               "empirical_error": float(np.linalg.norm(sol.psi_c - pair.psi))}]
    report += _bep1_rows(cfg, ctx, pair, f)
    write_report(out / "bep_report.csv", report)
    write_csv(out / "svd.csv", svd_report(ctx), SVD_FIELDS)
    (out / "pair.json").write_text(pair.to_json())
    gb = graph_basis(ctx)
    print(f"dim D_eps={sharmonic_subspace(ctx).dim} dim T_off={off_sigma_subspace(ctx).dim} dim graph={gb.dim}")
    print(f"|phi*|={np.linalg.norm(pair.phi):.6g} |psi*|={tnorm:.6g} c={c:.6g} noise={cfg.noise:g}")
    for r in rows:
        print(f"Y{r['n']},{r['m']}: truth={r['truth']:+.6e} bep1_err={r['bep1_error']:.2e} "
              f"est_err={r['estimate_error']:.2e} bound={r['bound']:.2e}")
    return EXIT_OK if all(r["within_bound"] for r in rows) else EXIT_INVARIANT


# -- entry point --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sphardy", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value configuration file")
    for f in dataclasses.fields(RunConfig):
        common.add_argument("--" + f.name.replace("_", "-"), dest=f.name, default=None, metavar=f.type.upper())
    sub = p.add_subparsers(dest="command", required=True)
    v = sub.add_parser("validate", parents=[common], help="run the invariant suites")
    v.add_argument("--inject-fault", default=None, help=argparse.SUPPRESS)
    sub.add_parser("decompose", parents=[common], help="Hardy coordinates of a sampled field").add_argument("field")
    sub.add_parser("pairgen", parents=[common], help="generate a graph pair")
    sub.add_parser("continue", parents=[common], help="apply T(+->-) to a plus-potential").add_argument("phi")
    sub.add_parser("bep1", parents=[common], help="BEP1 sweep over c")
    sub.add_parser("bep2", parents=[common], help="BEP2 sweep over c for each mode")
    sub.add_parser("estimate-mode", parents=[common], help="mode estimates with error bounds")
    sub.add_parser("svd-report", parents=[common], help="spectra of the locality operators")
    sub.add_parser("demo", parents=[common], help="end-to-end continuation demo")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {f.name: getattr(args, f.name) for f in dataclasses.fields(RunConfig)}
    try:
        cfg = load_config(args.config, overrides)
        cmd = args.command
        if cmd == "validate":
            return cmd_validate(cfg, args.inject_fault)
        if cmd == "decompose":
            return cmd_decompose(cfg, args.field)
        if cmd == "pairgen":
            return cmd_pairgen(cfg)
        if cmd == "continue":
            return cmd_continue(cfg, args.phi)
        if cmd == "bep1":
            return cmd_bep1(cfg)
        if cmd == "bep2":
            return cmd_bep2(cfg)
        if cmd == "estimate-mode":
            return cmd_estimate_mode(cfg)
        if cmd == "svd-report":
            return cmd_svd_report(cfg)
        return cmd_demo(cfg)
    except (InvalidArgument, PreconditionViolation, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InternalConsistencyError, NotInDomain) as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Subcommands orchestrate the library and emit CSV/JSON reports plus figures:

    arovsys sumrule    --profile p.json --out results/
    arovsys transfer   --profile p.json --z 0.5+1.2i --T 2.0
    arovsys gauge      --profile p.json --direction arov2pdb --out results/
    arovsys jmod       --matrix "2,0,0,0.5"
    arovsys nodes-demo --dims 2,1 --seed 7

Exit codes: 0 success, 1 input or configuration error, 2 verification
failure.  Identical configuration and seed produce byte-identical JSON and
CSV artifacts; every report echoes the options that produced it.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import nodes as nodes_mod
from .errors import ArovsysError, InputError, NotContractive, VerificationError
from .jalg import JAY, classify, polar_ju
from .profiles import ArovProfile
from .spectral import schur_grid, sumrule
from .system import PdBHamiltonian, arov_from_pdb, pdb_transfer, to_pdb, transfer

__all__ = ["main"]

_FORMATS = ("csv", "json", "svg")


@dataclass(frozen=True)
class RunConfig:
    command: str
    profile: str | None = None
    hamiltonian: str | None = None
    z: complex = 0.0j
    T: float = 1.0
    ode_step: float = 1e-3
    nodes: int = 2048
    tol: float = 1e-3
    out: str = "."
    formats: tuple = _FORMATS
    seed: int = 0
    direction: str = "arov2pdb"
    matrix: tuple | None = None
    dims: tuple = (2, 1)

    def __post_init__(self):
        if self.ode_step <= 0:
            raise InputError("--ode-step must be positive")
        if self.tol <= 0:
            raise InputError("--tol must be positive")
        n = self.nodes
        if n < 64 or (n & (n - 1)) != 0:
            raise InputError("--nodes must be a power of two >= 64")
        bad = [f for f in self.formats if f not in _FORMATS]
        if bad:
            raise InputError(f"unknown formats {bad}; choose from {_FORMATS}")

    def echo(self) -> dict:
        return {
            "command": self.command,
            "profile": self.profile,
            "ode_step": self.ode_step,
            "nodes": self.nodes,
            "tol": self.tol,
            "seed": self.seed,
            "formats": list(self.formats),
        }


def _parse_complex(text: str) -> complex:
    cleaned = text.strip().replace("i", "j").replace(" ", "")
    try:
        return complex(cleaned)
    except ValueError as exc:
        raise InputError(f"cannot parse complex number {text!r}") from exc


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _c2pair(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def _matrix_doc(m) -> list:
    return [[_c2pair(m[0, 0]), _c2pair(m[0, 1])], [_c2pair(m[1, 0]), _c2pair(m[1, 1])]]


def _load_profile(cfg: RunConfig) -> ArovProfile:
    if not cfg.profile:
        raise InputError("--profile is required for this command")
    path = Path(cfg.profile)
    if not path.exists():
        raise InputError(f"profile file {path} does not exist")
    return ArovProfile.from_json(path)


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_sumrule(cfg: RunConfig) -> int:
    p = _load_profile(cfg)
    report = sumrule(p, nodes=cfg.nodes, step=cfg.ode_step)
    grid = schur_grid(p, cfg.nodes, step=cfg.ode_step)
    out = _outdir(cfg)
    threshold = max(cfg.tol, 1e-2 * report.rhs_coefficient_integral)
    passed = report.abs_diff <= threshold
    doc = {
        "config": cfg.echo(),
        "report": report.to_dict(),
        "threshold": threshold,
        "passed": passed,
    }
    if "json" in cfg.formats:
        _write_json(out / "sumrule_report.json", doc)
    if "csv" in cfg.formats:
        grid.to_csv(out / "schur_grid.csv")
    if "svg" in cfg.formats:
        from . import plots

        plots.plot_schur_abs(grid, out / "schur_abs.svg")
        plots.plot_entropy_convergence(report.entropy_report, out / "entropy_convergence.svg")
    print(json.dumps({"lhs": report.lhs_entropy, "rhs": report.rhs_coefficient_integral,
                      "abs_diff": report.abs_diff, "passed": passed}))
    return 0 if passed else 2


def cmd_transfer(cfg: RunConfig) -> int:
    p = _load_profile(cfg)
    res = transfer(p, cfg.z, cfg.T, step=cfg.ode_step)
    m = res.matrix
    d = res.diagnostics
    su11 = bool(
        d["det_err"] <= 1e-8 and d.get("junitary_defect", np.inf) <= 1e-8
    )
    doc = {
        "config": cfg.echo(),
        "z": _c2pair(res.z),
        "T": res.T,
        "gauge": res.gauge,
        "matrix": _matrix_doc(m),
        "det_err": d["det_err"],
        "junitary_defect": d.get("junitary_defect"),
        "expanding_min_eig": d.get("expanding_min_eig"),
        "step_doubling_err": d.get("step_doubling_err"),
        "su11_member": su11,
    }
    print(json.dumps(doc, indent=2))
    if cfg.out != ".":
        _write_json(_outdir(cfg) / "transfer_report.json", doc)
    return 0


def cmd_gauge(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    if cfg.direction == "arov2pdb":
        p = _load_profile(cfg)
        horizon = cfg.T if cfg.T > p.T0 else p.T0
        ham = to_pdb(p, horizon, step=cfg.ode_step)
        rec = arov_from_pdb(ham)
        ts = ham.t[::2][2:-2]
        resid = float(
            max(
                np.abs(rec.a(ts) - p.a(ts)).max(),
                np.abs(rec.b(ts) - p.b(ts)).max(),
                np.abs(rec.c(ts) - p.c(ts)).max(),
            )
        )
        if "csv" in cfg.formats:
            ham.to_csv(out / "hamiltonian.csv")
        doc = {
            "config": cfg.echo(),
            "direction": cfg.direction,
            "T": horizon,
            "round_trip_residual": resid,
            "det_match_err": float(
                np.abs(np.linalg.det(ham.samples) - ham.det_reference).max()
            ),
        }
        if "json" in cfg.formats:
            _write_json(out / "gauge_report.json", doc)
        if "svg" in cfg.formats:
            from . import plots

            plots.plot_hamiltonian(ham, out / "hamiltonian.svg")
        print(json.dumps({"round_trip_residual": resid}))
        return 0
    if cfg.direction == "pdb2arov":
        if not cfg.hamiltonian:
            raise InputError("--hamiltonian CSV is required for pdb2arov")
        path = Path(cfg.hamiltonian)
        if not path.exists():
            raise InputError(f"hamiltonian file {path} does not exist")
        ham = PdBHamiltonian.from_csv(path)
        rec = arov_from_pdb(ham)
        ham2 = to_pdb(rec, ham.t_end, step=2.0 * ham.spacing)
        interior = slice(4, len(ham.t) - 4)
        resid = float(np.abs(ham2.samples[interior] - ham.samples[interior]).max())
        if "json" in cfg.formats:
            rec.to_json(out / "profile.json")
            _write_json(out / "gauge_report.json", {
                "config": cfg.echo(),
                "direction": cfg.direction,
                "T": ham.t_end,
                "round_trip_residual": resid,
                "det_match_err": None,
            })
        print(json.dumps({"round_trip_residual": resid}))
        return 0
    raise InputError(f"unknown direction {cfg.direction!r}")


def cmd_jmod(cfg: RunConfig) -> int:
    if cfg.matrix is None or len(cfg.matrix) != 4:
        raise InputError("--matrix needs four comma-separated complex entries")
    w = np.array(cfg.matrix, dtype=complex).reshape(2, 2)
    kind = classify(w)
    u, r = polar_ju(w)  # NotContractive propagates -> exit 2
    doc = {
        "config": cfg.echo(),
        "classification": kind,
        "modulus": _matrix_doc(r),
        "unitary": _matrix_doc(u),
        "residual_factorization": float(np.abs(u @ r - w).max()),
        "residual_junitarity": float(np.abs(u.conj().T @ JAY @ u - JAY).max()),
    }
    print(json.dumps(doc, indent=2))
    if cfg.out != ".":
        _write_json(_outdir(cfg) / "jmod_report.json", doc)
    return 0


def cmd_nodes_demo(cfg: RunConfig) -> int:
    n_state, n_coeff = cfg.dims
    rng = np.random.default_rng(cfg.seed)
    spec = nodes_mod.random_isometry_spec(rng, n_state, n_coeff)
    ag = nodes_mod.ag_extension(spec)
    probes = [0.0, 0.3, 0.35 + 0.6j]
    s0_norm = float(np.abs(nodes_mod.ag_blocks(ag, 0.0).s).max()) if ag.n_defect else 0.0
    char_norms = []
    pg_residuals = []
    for zeta in probes:
        blocks = nodes_mod.ag_blocks(ag, zeta)
        full = np.block([[blocks.s1, blocks.s], [blocks.s0, blocks.s2]])
        char_norms.append(float(np.linalg.norm(full, 2)))
        for _ in range(3):
            e = nodes_mod.random_unitary(rng, ag.n_defect) * 0.9
            pg_residuals.append(nodes_mod.pg_consistency(blocks, e))
    ext = nodes_mod.unitary_extension(spec, rng)
    w0 = nodes_mod.char_function(ext, 0.0) if n_state else ext.matrix
    b0 = nodes_mod.ag_blocks(ag, 0.0)
    ball_param = np.linalg.solve(b0.s2, (w0 - b0.s0)) @ np.linalg.inv(b0.s1)
    ball_norm = float(np.linalg.norm(ball_param, 2))
    worst = max(pg_residuals) if pg_residuals else 0.0
    passed = bool(
        worst <= 1e-10
        and s0_norm <= 1e-10
        and max(char_norms) <= 1.0 + 1e-10
        and ball_norm <= 1.0 + 1e-10
    )
    doc = {
        "config": cfg.echo(),
        "dims": {"n_state": n_state, "n_coeff": n_coeff, "n_defect": ag.n_defect},
        "s_at_zero_norm": s0_norm,
        "char_function_norms": char_norms,
        "pg_consistency_residuals": pg_residuals,
        "ball_membership_norm": ball_norm,
        "passed": passed,
    }
    print(json.dumps(doc, indent=2))
    if cfg.out != ".":
        _write_json(_outdir(cfg) / "nodes_demo_report.json", doc)
    return 0 if passed else 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arovsys",
        description="Canonical systems in the Arov gauge: sum rule, transfer "
                    "matrices, gauge conversion, j-modulus, operator nodes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--profile", help="profile JSON file")
        sp.add_argument("--ode-step", type=float, default=1e-3, dest="ode_step")
        sp.add_argument("--nodes", type=int, default=2048)
        sp.add_argument("--tol", type=float, default=1e-3)
        sp.add_argument("--out", default=".")
        sp.add_argument("--formats", default="csv,json,svg")
        sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("sumrule", help="verify entropy = coefficient integral")
    common(sp)

    sp = sub.add_parser("transfer", help="evaluate the chain at one point")
    common(sp)
    sp.add_argument("--z", default="0+0i")
    sp.add_argument("--T", type=float, default=1.0)

    sp = sub.add_parser("gauge", help="convert between triangular and B=0 gauges")
    common(sp)
    sp.add_argument("--direction", choices=("arov2pdb", "pdb2arov"), default="arov2pdb")
    sp.add_argument("--hamiltonian", help="Hamiltonian CSV (pdb2arov input)")
    sp.add_argument("--T", type=float, default=0.0)

    sp = sub.add_parser("jmod", help="polar factorization in the j-metric")
    common(sp)
    sp.add_argument("--matrix", required=True,
                    help="four comma-separated complex entries e11,e12,e21,e22")

    sp = sub.add_parser("nodes-demo", help="finite unitary-node pipeline with residuals")
    common(sp)
    sp.add_argument("--dims", default="2,1", help="state,coefficient dimensions")
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    kwargs = {
        "command": args.command,
        "profile": getattr(args, "profile", None),
        "hamiltonian": getattr(args, "hamiltonian", None),
        "ode_step": args.ode_step,
        "nodes": args.nodes,
        "tol": args.tol,
        "out": args.out,
        "formats": tuple(f.strip() for f in args.formats.split(",") if f.strip()),
        "seed": args.seed,
    }
    if hasattr(args, "z"):
        kwargs["z"] = _parse_complex(args.z)
    if hasattr(args, "T"):
        kwargs["T"] = args.T
    if hasattr(args, "direction"):
        kwargs["direction"] = args.direction
    if getattr(args, "matrix", None) is not None:
        kwargs["matrix"] = tuple(_parse_complex(v) for v in args.matrix.split(","))
    if hasattr(args, "dims"):
        try:
            a, b = (int(v) for v in args.dims.split(","))
        except ValueError as exc:
            raise InputError(f"cannot parse --dims {args.dims!r}") from exc
        kwargs["dims"] = (a, b)
    return RunConfig(**kwargs)


_DISPATCH = {
    "sumrule": cmd_sumrule,
    "transfer": cmd_transfer,
    "gauge": cmd_gauge,
    "jmod": cmd_jmod,
    "nodes-demo": cmd_nodes_demo,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
        return _DISPATCH[args.command](cfg)
    except NotContractive as exc:
        print(f"verification failure: {exc}; for a j-expanding matrix factor "
              f"its inverse (the inversion convention applies when det = 1)",
              file=sys.stderr)
        return 2
    except (InputError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1
    except VerificationError as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return 2
    except ArovsysError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

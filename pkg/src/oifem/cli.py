"""Command line entry point: ``oifem solve|oracle|nfinfo``.

Config files are flat ``key = value`` lines with ``#`` comments::

    mesh = slab            # or a path to an oimesh file
    nx = 4
    ny = 2
    length_1 = 1
    length_2 = 1
    height = 1
    law = sinh-bv          # or power:<p>
    dirichlet = 0 3        # values on dirA and dirB
    tol = 1e-10
    max_iter = 100
    output_prefix = out/run
    gap_tol = 1e-8         # bound on the diagnostic gaps for exit status 0
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from .assembly import DiscreteProblem
from .constitutive import LawSet, laws_by_name
from .dualcheck import diagnose
from .mesh import InterfaceMesh, generate_slab, read_mesh
from .nfunction import (
    LawOverflowError,
    conjugate_nfunction,
    delta2_probe,
    superquadratic_growth_check,
)
from .solver import minimize, slab_oracle
from .space import BrokenSpace, lift_dirichlet, write_field_csv

__all__ = ["RunConfig", "ConfigError", "parse_config", "run_solve", "run_oracle",
           "run_nfinfo", "main", "EXIT_OK", "EXIT_DIAGNOSTICS", "EXIT_CONFIG",
           "EXIT_NOT_CONVERGED"]

EXIT_OK = 0
EXIT_DIAGNOSTICS = 1
EXIT_CONFIG = 2
EXIT_NOT_CONVERGED = 3

log = logging.getLogger("oifem")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    mesh: str = "slab"
    nx: int = 4
    ny: int = 2
    length_1: float = 1.0
    length_2: float = 1.0
    height: float = 1.0
    law: str = "sinh-bv"
    dirichlet: Tuple[float, float] = (0.0, 3.0)
    tol: float = 1e-10
    max_iter: int = 100
    output_prefix: str = "oifem_run"
    gap_tol: float = 1e-8
    oracle_tol: float = 1e-8

    @property
    def is_slab(self) -> bool:
        return self.mesh == "slab"


_CASTS = {
    "mesh": str, "nx": int, "ny": int, "length_1": float, "length_2": float,
    "height": float, "law": str, "tol": float, "max_iter": int,
    "output_prefix": str, "gap_tol": float, "oracle_tol": float,
}


def parse_config(text: str, base_dir: Optional[Path] = None) -> RunConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        try:
            if key == "dirichlet":
                parts = val.replace(",", " ").split()
                if len(parts) != 2:
                    raise ValueError("needs two values")
                values[key] = (float(parts[0]), float(parts[1]))
            elif key in _CASTS:
                values[key] = _CASTS[key](val)
            else:
                raise ConfigError(f"config line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"config line {lineno}: bad value for {key}: {exc}") from None
    cfg = RunConfig(**values)
    if not cfg.tol > 0:
        raise ConfigError("tol must be positive")
    if cfg.max_iter < 0:
        raise ConfigError("max_iter must be nonnegative")
    try:
        laws_by_name(cfg.law)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if not cfg.is_slab and base_dir is not None and not Path(cfg.mesh).is_absolute():
        cfg.mesh = str(base_dir / cfg.mesh)
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, base_dir=path.parent)


def build_mesh(cfg: RunConfig) -> InterfaceMesh:
    if cfg.is_slab:
        return generate_slab(cfg.nx, cfg.ny, cfg.length_1, cfg.length_2, cfg.height)
    return read_mesh(cfg.mesh)


def _fmt(x) -> str:
    return f"{x:.17g}"


def _dump_json(data: dict, path: Path) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def run_solve(cfg: RunConfig, out=None) -> int:
    out = sys.stdout if out is None else out
    try:
        laws = laws_by_name(cfg.law)
        mesh = build_mesh(cfg)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    space = BrokenSpace(mesh)
    phi_a, phi_b = cfg.dirichlet
    problem = DiscreteProblem(space, laws, lift_dirichlet(space, phi_a, phi_b))
    try:
        report = minimize(problem, tol=cfg.tol, max_iter=cfg.max_iter)
    except LawOverflowError as exc:
        print(f"error: law overflow: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    field = report.final_field
    diag = diagnose(problem, field)

    summary = report.summary()
    summary["law"] = laws.name
    summary["n_dofs"] = space.n_dofs
    summary["n_free"] = problem.n_free
    checks_ok = (diag.energy_gap <= cfg.gap_tol
                 and diag.fenchel_gap_volume <= cfg.gap_tol
                 and diag.fenchel_gap_interface <= cfg.gap_tol)
    if cfg.is_slab:
        oracle = slab_oracle(laws, cfg.length_1, cfg.length_2, phi_a, phi_b)
        err = float(np.max(np.abs(field.values - oracle.interpolate(space).values)))
        summary["oracle_flux"] = oracle.flux
        summary["oracle_infnorm_error"] = err
        checks_ok = checks_ok and err <= cfg.oracle_tol

    prefix = Path(cfg.output_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    write_field_csv(field, f"{prefix}.field.csv")
    _dump_json(diag.to_dict(), Path(f"{prefix}.diag.json"))
    _dump_json(summary, Path(f"{prefix}.report.json"))

    print(f"converged = {report.converged}", file=out)
    print(f"iterations = {report.iterations}", file=out)
    print(f"residual = {_fmt(report.final_residual)}", file=out)
    print(f"energy = {_fmt(report.energy_history[-1])}", file=out)
    print(f"energy_gap = {_fmt(diag.energy_gap)}", file=out)
    if cfg.is_slab:
        print(f"oracle_infnorm_error = {_fmt(summary['oracle_infnorm_error'])}", file=out)
    if not report.converged:
        return EXIT_NOT_CONVERGED
    return EXIT_OK if checks_ok else EXIT_DIAGNOSTICS


def run_oracle(cfg: RunConfig, out=None) -> int:
    out = sys.stdout if out is None else out
    if not cfg.is_slab:
        print("error: the oracle needs a slab mesh", file=sys.stderr)
        return EXIT_CONFIG
    laws = laws_by_name(cfg.law)
    phi_a, phi_b = cfg.dirichlet
    prof = slab_oracle(laws, cfg.length_1, cfg.length_2, phi_a, phi_b)
    print(f"flux = {_fmt(prof.flux)}", file=out)
    print(f"jump = {_fmt(prof.jump)}", file=out)
    print(f"slope_1 = {_fmt(prof.slope_1)}", file=out)
    print(f"slope_2 = {_fmt(prof.slope_2)}", file=out)
    print("x,region,value", file=out)
    for region, (x0, x1) in ((1, (0.0, cfg.length_1)),
                             (2, (cfg.length_1, cfg.length_1 + cfg.length_2))):
        for x in np.linspace(x0, x1, cfg.nx + 1):
            print(f"{_fmt(x)},{region},{_fmt(float(prof(x, region)))}", file=out)
    return EXIT_OK


def nf_report(laws: LawSet, t_max: float = 1e6) -> dict:
    """Delta_2 verdicts for the volume (Phi), interface (Psi) potentials and
    their conjugates, region by region, plus superquadratic-growth witnesses."""
    entries = {}
    for key, nf in (("Phi[1]", laws.omega1.potential), ("Phi[2]", laws.omega2.potential),
                    ("Psi", laws.interface.potential)):
        entries[key] = (nf, delta2_probe(nf, t_max))
        conj = conjugate_nfunction(nf)
        entries[key.replace("Phi", "Phi*").replace("Psi", "Psi*")] = (
            conj, delta2_probe(conj, t_max))
    verdict = {
        "Phi": _combine(entries["Phi[1]"][1].satisfied, entries["Phi[2]"][1].satisfied),
        "Phi*": _combine(entries["Phi*[1]"][1].satisfied, entries["Phi*[2]"][1].satisfied),
        "Psi": entries["Psi"][1].satisfied,
        "Psi*": entries["Psi*"][1].satisfied,
    }
    growth = {key: superquadratic_growth_check(entries[key][0], t_max)
              for key in ("Phi[1]", "Phi[2]", "Psi")}
    couples = []
    if verdict["Phi"] == "yes" and verdict["Psi"] == "yes":
        couples.append("(Phi, Psi)")
    if verdict["Phi*"] == "yes" and verdict["Psi*"] == "yes":
        couples.append("(Phi*, Psi*)")
    return {"entries": entries, "verdict": verdict, "growth": growth, "delta": couples}


def _combine(a: str, b: str) -> str:
    if a == b == "yes":
        return "yes"
    if "no" in (a, b):
        return "no"
    return "inconclusive"


def run_nfinfo(law_name: str, out=None) -> int:
    out = sys.stdout if out is None else out
    try:
        laws = laws_by_name(law_name)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    rep = nf_report(laws)
    print(f"law = {laws.name}", file=out)
    for key, (nf, d2) in rep["entries"].items():
        print(f"delta2 {key} [{nf.label}] = {d2.satisfied} "
              f"(max_ratio={_fmt(d2.max_ratio_seen)}, c={_fmt(d2.witness_c)}, "
              f"K={_fmt(d2.witness_K)})", file=out)
    for key, v in rep["verdict"].items():
        print(f"delta2 {key} = {v}", file=out)
    delta = rep["delta"]
    print(f"assumption (Delta) = {'holds' if delta else 'not established'}"
          + (f" via {' and '.join(delta)}" if delta else ""), file=out)
    for key, g in rep["growth"].items():
        print(f"superquadratic {key} = {'yes' if g.satisfied else 'no'} "
              f"(K={_fmt(g.witness_K)}, equality={g.equality})", file=out)
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="oifem", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("solve", help="solve the interface problem described by a config")
    p.add_argument("config")
    p = sub.add_parser("oracle", help="print the exact slab solution for a config")
    p.add_argument("config")
    p = sub.add_parser("nfinfo", help="Delta_2 classification of a law's N-functions")
    p.add_argument("law")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    if args.command == "nfinfo":
        return run_nfinfo(args.law)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "solve":
        return run_solve(cfg)
    return run_oracle(cfg)


if __name__ == "__main__":
    sys.exit(main())

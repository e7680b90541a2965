"""Command-line entry point: ``urb {gamma,simulate,fit,verify,report}``.

Exit codes: 0 success, 1 verification checks failed, 2 invalid input,
3 solver non-convergence.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .diamond import DiamondNormError
from .fitting import FitResult, fit_exponential, robustness_bound
from .io import SchemeFileError, decay_to_csv, read_decay_csv, load_scheme, resolve_scheme_path
from .perturbation import SpectralAmbiguityError, spectral_split, verify_corollary
from .schemes import (
    BudgetExceededError,
    ModelError,
    URBScheme,
    certify_single_exponential,
    enumerate_decay,
    exact_decay,
    monte_carlo_decay,
    scheme_epsilon,
    scheme_quality,
    theorem_bound_check,
)
from .twirling import GammaBounds, gamma_bounds, physical_twirl

EXIT_OK, EXIT_CHECKS, EXIT_INVALID, EXIT_SOLVER = 0, 1, 2, 3
COMMANDS = ("gamma", "simulate", "fit", "verify", "report")
NORMS = ("so", "tr-estimate", "diamond-bound")


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    scheme_path: str
    m_grid: tuple = (1, 2, 4, 8, 16, 32)
    K: int = 300
    shots: int = 100
    seed: int = 0
    norm_choice: str = "diamond-bound"
    output_path: str | None = None
    m_cutoff: int = 8
    data_path: str | None = None
    verify_grid: tuple = field(default_factory=lambda: tuple(range(1, 51)))

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if self.norm_choice not in NORMS:
            raise ValueError(f"unknown norm {self.norm_choice!r}")
        for name in ("m_grid", "verify_grid"):
            g = getattr(self, name)
            if not g or any(m < 1 for m in g) or any(b <= a for a, b in zip(g, g[1:])):
                raise ValueError(f"{name} must be strictly increasing positive integers")
        if self.K < 1 or self.shots < 1 or self.m_cutoff < 1:
            raise ValueError("sequences, shots and m-cutoff must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def parse_grid(text: str) -> tuple:
    """``"1,2,4"`` or an inclusive range ``"1:50"`` (optionally ``"1:50:2"``)."""
    try:
        if ":" in text:
            parts = [int(x) for x in text.split(":")]
            if len(parts) not in (2, 3):
                raise ValueError
            step = parts[2] if len(parts) == 3 else 1
            return tuple(range(parts[0], parts[1] + 1, step))
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid m grid {text!r}") from None


def selected_gamma(g: GammaBounds, norm: str) -> float:
    if norm == "so":
        return g.so_exact
    if norm == "tr-estimate":
        return g.tr_chain
    return g.smallest


def _gamma_block(g: GammaBounds, norm: str) -> list[str]:
    lines = []
    for key in ("so_exact", "tr_chain", "diamond_chain", "l2", "induced_l1", "convex"):
        v = getattr(g, key)
        if v is None:
            lines.append(f"{key} = n/a ({g.notes.get(key, 'hypothesis not met')})")
        else:
            lines.append(f"{key} = {v:.16g}")
    lines.append(f"smallest = {g.smallest:.16g} ({g.smallest_label})")
    lines.append(f"selected[{norm}] = {selected_gamma(g, norm):.16g}")
    return lines


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    def default(o):
        if isinstance(o, np.generic):
            return o.item()
        if isinstance(o, float) and not math.isfinite(o):
            return str(o)
        raise TypeError(type(o).__name__)

    return json.dumps(obj, indent=2, default=default, allow_nan=False) + "\n"



def _load(cfg: RunConfig) -> URBScheme:
    return load_scheme(resolve_scheme_path(cfg.scheme_path))


def _values(s: URBScheme, grid) -> np.ndarray:
    if s.povm.factored:
        return exact_decay(s, list(grid))
    return np.array([enumerate_decay(s, m) for m in grid])


def _robustness(fit: FitResult, epsilon: float):
    alpha, A0 = fit.p, abs(fit.B)
    if fit.degenerate or not 0 < alpha < 1 or A0 <= 0:
        return None
    return robustness_bound(A0, alpha, int(min(fit.m_values)), epsilon)


def _fidelity_block(s: URBScheme, fit: FitResult) -> dict:
    from .fitting import exponent_to_fidelity

    if s.fidelity_license is None:
        return {"licensed": False, "note": "the scheme carries no model tag relating the exponent to average fidelity"}
    return {"licensed": True, "model": s.fidelity_license, "average_fidelity": exponent_to_fidelity(fit.p, s.dim)}


def cmd_gamma(cfg: RunConfig) -> int:
    s = _load(cfg)
    g = gamma_bounds(s.ensemble)
    if cfg.output_path:
        _emit(_json({"scheme": s.name, "gamma_bounds": g.as_dict(), "norm": cfg.norm_choice,
                     "selected": selected_gamma(g, cfg.norm_choice)}), cfg.output_path)
    print("\n".join(_gamma_block(g, cfg.norm_choice)))
    return EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    s = _load(cfg)
    ds = monte_carlo_decay(s, list(cfg.m_grid), cfg.K, cfg.shots, cfg.seed)
    _emit(decay_to_csv(ds), cfg.output_path)
    return EXIT_OK


def _fit_record(cfg: RunConfig, s: URBScheme) -> dict:
    ds = read_decay_csv(cfg.data_path) if cfg.data_path else monte_carlo_decay(
        s, list(cfg.m_grid), cfg.K, cfg.shots, cfg.seed
    )
    fit = fit_exponential(ds)
    eps, eps_se, method, partial = scheme_epsilon(s, cfg.m_cutoff, seed=cfg.seed)
    rb = _robustness(fit, eps)
    return {
        "dataset": ds,
        "data": {"m": list(ds.m_values), "p_hat": list(ds.estimates), "std_err": list(ds.std_errors),
                 "K": ds.sequences_per_length, "shots": ds.shots_per_sequence, "seed": ds.seed,
                 "source": cfg.data_path or "simulated"},
        "fit": fit,
        "robustness": rb,
        "epsilon": {"value": eps, "std_error": eps_se, "method": method, "partial": partial},
        "fidelity": _fidelity_block(s, fit),
        "figure_of_merit": {"prefactor": s.prefactor, "offset": s.offset},
    }


def _fit_json(rec: dict) -> dict:
    out = dict(rec)
    out.pop("dataset")
    out["fit"] = rec["fit"].as_dict()
    out["robustness"] = None if rec["robustness"] is None else rec["robustness"].as_dict()
    return out


def cmd_fit(cfg: RunConfig) -> int:
    s = _load(cfg)
    rec = _fit_record(cfg, s)
    fit = rec["fit"]
    lines = [fit.as_text()]
    rb = rec["robustness"]
    if rb is None:
        lines.append("robustness = n/a (needs 0 < p < 1 and a nondegenerate fit)")
    else:
        lines += [f"robustness_{k} = {v}" for k, v in rb.as_dict().items()]
    fid = rec["fidelity"]
    lines.append(f"average_fidelity = {fid.get('average_fidelity', 'not licensed')}")
    print("\n".join(lines))
    if cfg.output_path:
        _emit(_json(_fit_json(rec)), cfg.output_path)
    if not fit.converged:
        raise SolverError("exponential fit did not converge")
    return EXIT_OK


def _verify_record(cfg: RunConfig, s: URBScheme) -> dict:
    q = scheme_quality(s, cfg.m_cutoff, seed=cfg.seed)
    grid = list(cfg.verify_grid)
    values = _values(s, grid)
    fit = fit_exponential(values, grid)
    tc = theorem_bound_check(s, q, fit, grid, values=values)
    gamma_sel = selected_gamma(q.gamma_bounds, cfg.norm_choice)
    try:
        split = spectral_split(physical_twirl(s.ensemble))
        cor = verify_corollary(split, gamma_sel, q.delta, norm=cfg.norm_choice)
        split_rec = {"lambda_unit": [split.lambda_unit.real, split.lambda_unit.imag], "p": split.p,
                     "remainder_norm": split.remainder_norm, "kappa_estimate": split.kappa_estimate,
                     "diagonalizable": split.diagonalizable, "reconstruction_error": split.reconstruction_error}
    except SpectralAmbiguityError as exc:
        cor, split_rec = None, {"error": str(exc)}
    cert = certify_single_exponential(q)
    checks = [
        ("hypothesis delta <= (1-gamma)/11", tc.hypothesis_ok),
        ("fitted p in [1-2 delta, 1]", tc.p_window_ok),
        ("residuals <= eps + 16 (gamma+6 delta)^m", tc.residuals_ok),
    ]
    if cor is not None:
        checks += [
            ("dominant eigenvalues within 2 delta of 1", cor.eig_close),
            ("remainder norm <= gamma + 6 delta", cor.remainder_ok),
            ("kappa <= 16", cor.kappa_ok),
        ]
    else:
        checks.append(("rank-2 dominant block", False))
    checks.append(("single-exponential certification", cert.certified))
    return {"quality": q, "fit": fit, "theorem": tc, "corollary": cor, "split": split_rec,
            "certification": cert, "checks": checks}


def _verify_json(rec: dict) -> dict:
    return {
        "quality": rec["quality"].as_dict(),
        "fit": rec["fit"].as_dict(),
        "theorem": rec["theorem"].as_dict(),
        "corollary": None if rec["corollary"] is None else rec["corollary"].as_dict(),
        "split": rec["split"],
        "certification": asdict(rec["certification"]),
        "checks": [{"check": n, "pass": bool(ok)} for n, ok in rec["checks"]],
    }


def cmd_verify(cfg: RunConfig) -> int:
    s = _load(cfg)
    rec = _verify_record(cfg, s)
    width = max(len(n) for n, _ in rec["checks"])
    for name, ok in rec["checks"]:
        print(f"{name:<{width}}  {'PASS' if ok else 'FAIL'}")
    print(rec["certification"].reason)
    if cfg.output_path:
        _emit(_json(_verify_json(rec)), cfg.output_path)
    return EXIT_OK if all(ok for _, ok in rec["checks"]) else EXIT_CHECKS


def cmd_report(cfg: RunConfig) -> int:
    s = _load(cfg)
    g = gamma_bounds(s.ensemble)
    fit_rec = _fit_record(cfg, s)
    ver = _verify_record(cfg, s)
    doc = {
        "artifact": "urb",
        "version": __version__,
        "config": asdict(cfg),
        "scheme": {"name": s.name, "dim": s.dim, "elements": len(s.ensemble), "povm": s.povm.kind},
        "gamma": {**g.as_dict(), "norm": cfg.norm_choice, "selected": selected_gamma(g, cfg.norm_choice)},
        "decay_csv": decay_to_csv(fit_rec["dataset"]),
        "fit": _fit_json(fit_rec),
        "verification": _verify_json(ver),
    }
    _emit(_json(doc), cfg.output_path)
    if not fit_rec["fit"].converged or not ver["fit"].converged:
        raise SolverError("exponential fit did not converge")
    return EXIT_OK


HANDLERS = {"gamma": cmd_gamma, "simulate": cmd_simulate, "fit": cmd_fit, "verify": cmd_verify, "report": cmd_report}


def run(cfg: RunConfig) -> int:
    try:
        return HANDLERS[cfg.command](cfg)
    except (SchemeFileError, BudgetExceededError, FileNotFoundError, ModelError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (DiamondNormError, SolverError, np.linalg.LinAlgError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="urb", description="Universal randomized benchmarking toolkit")
    ap.add_argument("--version", action="version", version=f"urb {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--scheme", required=True, help="scheme JSON file or bundled scheme name")
        p.add_argument("--m-grid", type=parse_grid, default=RunConfig.m_grid)
        p.add_argument("--sequences", type=int, default=RunConfig.K)
        p.add_argument("--shots", type=int, default=RunConfig.shots)
        p.add_argument("--seed", type=int, default=RunConfig.seed)
        p.add_argument("--norm", choices=NORMS, default=RunConfig.norm_choice)
        p.add_argument("--out")
        p.add_argument("--m-cutoff", type=int, default=RunConfig.m_cutoff)
        p.add_argument("--verify-grid", type=parse_grid, default=tuple(range(1, 51)))
        if name in ("fit", "report"):
            p.add_argument("--data", help="decay CSV to fit instead of simulating")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code not in (0, None) else EXIT_OK
    try:
        cfg = RunConfig(
            command=args.command,
            scheme_path=args.scheme,
            m_grid=tuple(args.m_grid),
            K=args.sequences,
            shots=args.shots,
            seed=args.seed,
            norm_choice=args.norm,
            output_path=args.out,
            m_cutoff=args.m_cutoff,
            data_path=getattr(args, "data", None),
            verify_grid=tuple(args.verify_grid),
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())

"""Command line driver: dispersion, simulate, extract, invert, roundtrip, selftest.

Every stage writes its artifact into the output directory so that the stages can
be chained by file or run together with ``roundtrip``.

Exit status: 0 success, 1 stage error, 2 recovery outside tolerance or solver
failure, 3 degenerate spectrum.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import jsonio
from .inverse import (
    IdentifiabilityWarning,
    RecoveryResult,
    SolverOptions,
    Status,
    invariant_errors,
    relative_errors,
    result_to_dict,
    solve_inverse,
)
from .pde import (
    SimulationError,
    SteadyOptions,
    chi0_threshold_scan,
    dispersion_scan,
    read_fields_csv,
    simulate,
    write_fields_csv,
)
from .residuals import (
    PARAM_NAMES,
    AmplitudeSpectrum,
    GalerkinNonConvergence,
    Model,
    ModelParams,
    galerkin_pattern,
    generic_residuals,
    leakage,
    residuals,
)
from .spectral import ExtractionResult, extract, read_spectrum, spectrum_to_dict, write_spectrum

EXIT_OK, EXIT_ERROR, EXIT_TOLERANCE, EXIT_DEGENERATE = 0, 1, 2, 3


class StageError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


def _params_dict(p: ModelParams | None):
    return None if p is None else {n: float(getattr(p, n)) for n in PARAM_NAMES}


def _out(cfg_out: Path, name: str) -> Path:
    cfg_out.mkdir(parents=True, exist_ok=True)
    return cfg_out / name


# stages ---------------------------------------------------------------------

def run_dispersion(cfg: cfgmod.ExperimentConfig) -> tuple[Path, str]:
    rep = dispersion_scan(cfg.d_n, cfg.d_c, cfg.chi0, cfg.r, cfg.L, cfg.m_max)
    path = _out(cfg.out_dir, "dispersion.csv")
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["m", "q", "growth"])
        for m, q, s in zip(rep.m, rep.q_values, rep.growth):
            w.writerow([int(m), f"{q:.17g}", f"{s:.17g}"])
    if rep.unstable:
        verdict = f"unstable: fastest mode m={rep.m_star} q={rep.q_star:.17g} growth={rep.growth[rep.m_star]:.17g}"
    else:
        verdict = "stable"
    if cfg.chi0_sweep:
        lo, hi, count = cfg.chi0_sweep
        boundary = chi0_threshold_scan(cfg.d_n, cfg.d_c, cfg.r, cfg.L, cfg.m_max, np.linspace(lo, hi, count))
        verdict += "; boundary chi0 " + ("not reached" if boundary is None else f"= {boundary:.17g}")
    _out(cfg.out_dir, "dispersion.txt").write_text(verdict + "\n")
    return path, verdict


def run_simulate(cfg: cfgmod.ExperimentConfig):
    try:
        p = cfg.coefficients()
        opts = SteadyOptions(steady_tol=cfg.steady_tol, t_max=cfg.t_max)
        g, f = simulate(p, cfg.L, cfg.N, mode=cfg.mode if cfg.seed is None else None,
                        amplitude=cfg.amplitude, seed=cfg.seed, opts=opts)
    except (SimulationError, ValueError) as exc:
        raise StageError("simulate", str(exc)) from exc
    write_fields_csv(_out(cfg.out_dir, "fields.csv"), g, f)
    return g, f


def run_extract(g, f, model: Model, M: int, out_dir: Path) -> ExtractionResult:
    try:
        ex = extract(g, f, M, model)
    except ValueError as exc:
        raise StageError("extract", str(exc)) from exc
    write_spectrum(_out(out_dir, "spectrum.json"), ex.spectrum)
    return ex


def solver_options(cfg: cfgmod.ExperimentConfig | None, spec: AmplitudeSpectrum) -> SolverOptions:
    if cfg is None:
        return SolverOptions()
    fixed = {}
    for name, value in cfg.fixed.items():
        if value is None:
            if name == "k":
                if not spec.k:
                    raise StageError("invert", "cannot pin k: spectrum carries no wavenumber")
                value = spec.k
            else:
                value = getattr(cfg, name)
        fixed[name] = float(value)
    return SolverOptions(tol=cfg.solver_tol, equations=cfg.equations, fixed=fixed)


def run_invert(spec: AmplitudeSpectrum, model: Model, M: int, opts: SolverOptions, out_dir: Path) -> RecoveryResult:
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IdentifiabilityWarning)
            res = solve_inverse(spec, model, M, opts)
    except ValueError as exc:
        raise StageError("invert", str(exc)) from exc
    jsonio.dump(result_to_dict(res), _out(out_dir, "recovery.json"))
    return res


def synthetic_spectrum(cfg: cfgmod.ExperimentConfig) -> AmplitudeSpectrum:
    """Galerkin pattern at the configured parameters, or the flat state below onset."""
    m = cfg.mode or 1
    k = m * math.pi / cfg.L
    M = cfg.truncation
    p = cfg.params(k)
    k2 = k * k
    onset = (p.d_n * k2 + p.r) * (p.d_c * k2 + 1.0) / k2
    if p.chi0 <= onset:
        alpha = np.zeros(M + 1)
        alpha[0] = 1.0
        return AmplitudeSpectrum(alpha, alpha.copy(), k=k, L=cfg.L, m=m, model=cfg.model)
    try:
        sol = galerkin_pattern(p, M)
    except GalerkinNonConvergence as exc:
        raise StageError("simulate", f"Galerkin pattern: {exc}") from exc
    s = sol.spectrum
    return AmplitudeSpectrum(s.alpha, s.beta, k=k, L=cfg.L, m=m, model=cfg.model)


def roundtrip(cfg: cfgmod.ExperimentConfig, galerkin_synthetic: bool = False) -> tuple[dict, int]:
    M = cfg.truncation
    if galerkin_synthetic:
        spec = synthetic_spectrum(cfg)
        write_spectrum(_out(cfg.out_dir, "spectrum.json"), spec)
        diagnostics = {"source": "galerkin"}
    else:
        _, steady = run_simulate(cfg)
        # hand off through the written file, exactly as the staged commands do
        g, f = read_fields_csv(cfg.out_dir / "fields.csv")
        ex = run_extract(g, f, cfg.model, M, cfg.out_dir)
        spec = ex.spectrum
        diagnostics = {
            "source": "pde",
            "steady_time": steady.time,
            "rate_norm": steady.rate_norm,
            "fundamental_mode": ex.fundamental_mode,
            "tail_energy": ex.tail_energy,
            "contamination": ex.contamination,
        }
    res = run_invert(spec, cfg.model, M, solver_options(cfg, spec), cfg.out_dir)
    m = spec.m or 1
    truth = cfg.params(m * math.pi / cfg.L)

    report = {
        "model": int(cfg.model),
        "M": M,
        "true_params": _params_dict(truth),
        "true_invariants": truth.invariants(),
        "spectrum": spectrum_to_dict(spec),
        "recovery": result_to_dict(res),
        "diagnostics": diagnostics,
        "tolerance": cfg.tolerance,
    }
    if res.status is Status.DEGENERATE:
        report["verdict"] = "degenerate"
        return report, EXIT_DEGENERATE

    try:
        diagnostics["residual_at_truth"] = float(np.linalg.norm(residuals(spec, truth, M)) / truth.r)
        diagnostics["leakage_at_truth"] = [float(v) for v in leakage(spec, truth, M)]
        if res.params is not None:
            diagnostics["leakage_at_recovered"] = [float(v) for v in leakage(spec, res.params, M)]
    except ValueError as exc:
        diagnostics["residual_error"] = str(exc)

    if res.params is None:
        report["verdict"] = "failed"
        return report, EXIT_TOLERANCE
    errors = relative_errors(res.params, truth)
    report["relative_errors"] = errors
    report["invariant_errors"] = invariant_errors(res.params, truth)
    report["k_error"] = abs(res.params.k - truth.k) / truth.k
    # PDE spectra never satisfy a truncated system exactly, so only the parameter
    # errors decide; the solver status is reported alongside
    ok = max(errors.values()) < cfg.tolerance
    report["verdict"] = "pass" if ok else "fail"
    return report, EXIT_OK if ok else EXIT_TOLERANCE


# selftest -------------------------------------------------------------------

def selftest() -> bool:
    rng = np.random.default_rng(0)
    ok = True

    def line(name, passed, detail=""):
        nonlocal ok
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}".rstrip())

    worst = 0.0
    for model, M in ((Model.ONE, 1), (Model.ONE, 2), (Model.ONE, 3), (Model.TWO, 1), (Model.TWO, 2)):
        for _ in range(20):
            p = ModelParams(model, *np.exp(rng.uniform(-1, 1, 5)))
            a = np.concatenate(([1.0 + rng.uniform(-0.2, 0.2)], rng.uniform(-0.1, 0.1, M)))
            spec = AmplitudeSpectrum(a)
            hand = residuals(spec, p, M)
            gen = generic_residuals(spec, p, M)
            worst = max(worst, float(np.max(np.abs(hand - gen)) / max(np.max(np.abs(gen)), 1e-300)))
    line("hand-written systems match series expansion", worst < 1e-12, f"max rel diff {worst:.2e}")

    zero = True
    for model, M in ((Model.ONE, 3), (Model.TWO, 2)):
        p = ModelParams(model, 0.1, 1.0, 1.0, 1.0, 1.0)
        for level in (0.0, 1.0):
            spec = AmplitudeSpectrum(np.r_[level, np.zeros(M)])
            zero &= not np.any(residuals(spec, p, M))
    line("flat states zero every equation", zero)

    q = (1.0 / 0.1) ** 0.25
    truth = ModelParams(Model.ONE, 0.1, 1.0, (0.1 * q * q + 1) * (q * q + 1) / (q * q) * 1.1, 1.0, q)
    spec = galerkin_pattern(truth, 3).spectrum
    res = solve_inverse(spec, Model.ONE, 3, SolverOptions(equations="galerkin", fixed={"k": truth.k, "r": truth.r}))
    err = max(relative_errors(res.params, truth).values())
    line("Galerkin data recovered with k and r pinned", res.status is Status.CONVERGED and err < 1e-6, f"max rel err {err:.2e}")
    return ok


# argument handling ----------------------------------------------------------

def _load_cfg(args, required: bool = True):
    if args.config is None:
        if required:
            raise StageError("config", "--config is required for this command")
        return None
    cfg = cfgmod.load(args.config)
    if args.model is not None:
        cfg = replace(cfg, model=Model(args.model))
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed, mode=None)
    if args.out is not None:
        cfg = replace(cfg, out_dir=Path(args.out))
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="turing-inverse", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="experiment INI file")
    common.add_argument("--out", type=Path, help="output directory (overrides the config)")
    common.add_argument("--model", type=int, choices=(1, 2))
    common.add_argument("--seed", type=int, help="random initial perturbation seed")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("dispersion", parents=[common], help="growth rates of the domain modes")
    sub.add_parser("simulate", parents=[common], help="run the PDE to a steady state")
    p = sub.add_parser("extract", parents=[common], help="cosine amplitudes of a field CSV")
    p.add_argument("--input", type=Path, help="field CSV (default: OUT/fields.csv)")
    p.add_argument("-M", type=int, help="truncation order")
    p = sub.add_parser("invert", parents=[common], help="recover parameters from a spectrum JSON")
    p.add_argument("--input", type=Path, help="spectrum JSON (default: OUT/spectrum.json)")
    p.add_argument("-M", type=int, help="truncation order")
    p = sub.add_parser("roundtrip", parents=[common], help="simulate, extract and invert")
    p.add_argument("--galerkin-synthetic", action="store_true", help="replace the PDE by a Galerkin solve")
    sub.add_parser("selftest", help="quick internal consistency checks")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "selftest":
            return EXIT_OK if selftest() else EXIT_ERROR

        if args.command == "dispersion":
            cfg = _load_cfg(args)
            path, verdict = run_dispersion(cfg)
            print(verdict)
            return EXIT_OK

        if args.command == "simulate":
            cfg = _load_cfg(args)
            g, f = run_simulate(cfg)
            print(f"steady state at t = {f.time:.6g} (rate norm {f.rate_norm:.3e}) -> {cfg.out_dir / 'fields.csv'}")
            return EXIT_OK

        if args.command == "extract":
            cfg = _load_cfg(args, required=False)
            out_dir = args.out or (cfg.out_dir if cfg else Path("out"))
            src = args.input or out_dir / "fields.csv"
            try:
                g, f = read_fields_csv(src)
            except (OSError, ValueError) as exc:
                raise StageError("extract", str(exc)) from exc
            model = Model(args.model) if args.model else (cfg.model if cfg else None)
            M = args.M or (cfg.truncation if cfg else None)
            ex = run_extract(g, f, model, M, out_dir)
            print(f"fundamental mode {ex.fundamental_mode}, alpha = {ex.spectrum.alpha.tolist()}")
            return EXIT_OK

        if args.command == "invert":
            cfg = _load_cfg(args, required=False)
            out_dir = args.out or (cfg.out_dir if cfg else Path("out"))
            src = args.input or out_dir / "spectrum.json"
            try:
                spec = read_spectrum(src)
            except (OSError, ValueError) as exc:
                raise StageError("invert", f"{src}: {exc}") from exc
            model = Model(args.model) if args.model else (cfg.model if cfg else spec.model)
            if model is None:
                raise StageError("invert", "model unknown: pass --model or a config")
            M = args.M or (cfg.truncation if cfg else (3 if model is Model.ONE else 2))
            res = run_invert(spec, model, M, solver_options(cfg, spec), out_dir)
            print(f"{res.status.value}: residual {res.residual_norm:.3e}, params {_params_dict(res.params)}")
            if res.status is Status.DEGENERATE:
                return EXIT_DEGENERATE
            return EXIT_OK if res.status is Status.CONVERGED else EXIT_TOLERANCE

        if args.command == "roundtrip":
            cfg = _load_cfg(args)
            report, code = roundtrip(cfg, args.galerkin_synthetic)
            jsonio.dump(report, _out(cfg.out_dir, "roundtrip.json"))
            print(f"{report['verdict']}: status {report['recovery']['status']}", end="")
            if "relative_errors" in report:
                worst = max(report["relative_errors"].values())
                print(f", worst relative error {worst:.3e} (tolerance {cfg.tolerance})")
            else:
                print()
            return code
    except cfgmod.ConfigError as exc:
        print(f"error [config] {exc}", file=sys.stderr)
        return EXIT_ERROR
    except StageError as exc:
        print(f"error {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: ``viraldyn {simulate,stability,sweep,sensitivity}``.

Every command writes plain files into ``--out`` for external plotting.
Exit codes: 0 success, 2 invalid configuration, 3 numerical failure, 4 I/O.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import dataclasses
import json
import logging
import math
import os
import sys
from pathlib import Path

from . import analysis, dde, equilibria, linearization, sensitivity
from .errors import (
    BlowUpError,
    BracketError,
    ContractError,
    InconsistencyError,
    InvalidInputError,
    RangeError,
    ViraldynError,
)
from .model import PRESETS, ModelParams, State, load_params, preset

logger = logging.getLogger("viraldyn")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

DEFAULT_T_END = 4000.0
E2_PERTURBATION = 0.10
E1_PERTURBATION = 1e-3
THREADS_ENV = "VIRALDYN_THREADS"
SWEEP_AXES = ("tau", "c", "alpha")
SWEEP_HEADER = ("axis,value,r0,classification,tau0,verdict,period,amplitude_V,"
                "distance,clamped,disagreement,error")


@dataclasses.dataclass(frozen=True)
class RunConfig:
    params: ModelParams
    history: str
    t_end: float
    step: float | None
    output_dir: Path
    transient_fraction: float = analysis.DEFAULT_TRANSIENT
    settle_tol: float = analysis.DEFAULT_SETTLE_TOL
    axis: str | None = None
    grid: tuple = ()

    def __post_init__(self):
        if not (self.t_end > 0 and math.isfinite(self.t_end)):
            raise InvalidInputError(f"--t-end must be positive, got {self.t_end!r}")
        if self.step is not None and not self.step > 0:
            raise InvalidInputError(f"--step must be positive, got {self.step!r}")
        if self.grid and list(self.grid) != sorted(self.grid):
            raise InvalidInputError("--grid must be sorted ascending")


# --- initial histories ------------------------------------------------------

def default_history(params: ModelParams, spec: str = "auto"):
    """Constant initial state and a description of how it was chosen.

    ``auto``: 10% above E2 when E2 exists, otherwise E1 with ``I`` and ``V``
    raised by ``1e-3 T0``.  ``e1``/``e2`` force one of the two; ``T,I,V``
    gives the state explicitly.
    """
    eqs = equilibria.equilibria(params)
    e1 = eqs[0].state
    if spec == "auto":
        spec = "e2" if len(eqs) > 1 else "e1"
    if spec == "e2":
        if len(eqs) < 2:
            raise InvalidInputError("history 'e2' requested but R0 <= 1 (no infected equilibrium)")
        state = State(*(float(x) * (1.0 + E2_PERTURBATION) for x in eqs[1].state))
        return state, f"E2 scaled by {1.0 + E2_PERTURBATION:g}"
    if spec == "e1":
        bump = E1_PERTURBATION * e1.t_cells
        return State(e1.t_cells, bump, bump), f"E1 plus (0, {E1_PERTURBATION:g}*T0, {E1_PERTURBATION:g}*T0)"
    try:
        values = [float(x) for x in spec.split(",")]
    except ValueError:
        raise InvalidInputError(f"--history must be auto, e1, e2 or T,I,V; got {spec!r}") from None
    if len(values) != 3 or not all(math.isfinite(v) and v >= 0 for v in values):
        raise InvalidInputError(f"--history needs three nonnegative numbers, got {spec!r}")
    return State(*values), "user supplied"


# --- single runs --------------------------------------------------------------

def run_point(params: ModelParams, cfg: RunConfig):
    """Integrate once and classify; returns ``(trajectory, verdict, metadata)``."""
    state, how = default_history(params, cfg.history)
    traj = dde.integrate(params, state, cfg.t_end, cfg.step)
    eqs = equilibria.equilibria(params)
    verdict = analysis.detect_outcome(traj, eqs, cfg.settle_tol, cfg.transient_fraction)
    meta = {
        "params": params.as_dict(),
        "history": list(state),
        "history_choice": how,
        "t_end": cfg.t_end,
        "step": traj.step,
        "settle_tol": cfg.settle_tol,
        "clamped": traj.clamped,
        "positivity_violations": traj.positivity_violations,
    }
    return traj, verdict, meta


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    logger.info("wrote %s", path)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def cmd_simulate(cfg: RunConfig) -> int:
    traj, verdict, meta = run_point(cfg.params, cfg)
    out = cfg.output_dir
    _write(out / "trajectory.csv", traj.to_csv())
    _write(out / "peaks.csv", analysis.peaks_csv(verdict))
    perm = analysis.check_permanence(traj, analysis.permanence_bounds(cfg.params),
                                     transient_fraction=cfg.transient_fraction)
    _write(out / "verdict.json", _json({"verdict": verdict.as_dict(), "metadata": meta,
                                        "permanence": perm.as_dict()}))
    print(verdict.label)
    return EXIT_OK


def stability_document(params: ModelParams) -> dict:
    eqs = equilibria.equilibria(params)
    e1 = eqs[0]
    doc = {
        "params": params.as_dict(),
        "r0": e1.r0_at_params,
        "t0": e1.state.t_cells,
        "infection_free": linearization.classify(params, e1).as_dict(),
        "infected": None,
        "delay_length": None,
        "permanence_bounds": analysis.permanence_bounds(params).as_dict(),
    }
    if len(eqs) > 1:
        e2 = eqs[1]
        doc["infected"] = linearization.classify(params, e2).as_dict()
        est = linearization.delay_length_estimate(linearization.char_coeffs(params, e2))
        doc["delay_length"] = est.as_dict()
    else:
        doc["infected"] = equilibria.NoInfectedEquilibrium(e1.r0_at_params).as_dict()
    return doc


def cmd_stability(cfg: RunConfig) -> int:
    text = _json(stability_document(cfg.params))
    _write(cfg.output_dir / "stability.json", text)
    sys.stdout.write(text)
    return EXIT_OK


def _predicted(params: ModelParams):
    """Analytic classification of the equilibrium that should attract, and tau0."""
    eqs = equilibria.equilibria(params)
    rep = linearization.classify(params, eqs[-1])
    return eqs[-1].r0_at_params, rep


def _expected_verdict(r0_value, report) -> str:
    cls = linearization.Classification
    if r0_value <= 1.0:
        return "ConvergedTo(InfectionFree)"
    if report.classification in (cls.STABLE_ALL_TAU, cls.STABLE_BELOW_TAU0):
        return "ConvergedTo(Infected)"
    return analysis.Outcome.OSCILLATION.value


def sweep_row(axis: str, value: float, cfg: RunConfig) -> dict:
    row = {"axis": axis, "value": value}
    try:
        params = cfg.params.replace(**{axis: value})
        r0_value, report = _predicted(params)
        row.update(r0=r0_value, classification=report.classification.value, tau0=report.tau0)
        traj, verdict, _ = run_point(params, cfg)
        row.update(verdict=verdict.label, period=verdict.period,
                   amplitude_V=verdict.amplitude[2] if verdict.amplitude else None,
                   distance=verdict.distance, clamped=traj.clamped)
        row["disagreement"] = verdict.label != _expected_verdict(r0_value, report)
    except ViraldynError as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "yes" if x else "no"
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x).replace(",", ";").replace("\n", " ")


def format_sweep(rows) -> str:
    cols = SWEEP_HEADER.split(",")
    lines = [SWEEP_HEADER]
    for row in rows:
        lines.append(",".join(_cell(row.get(c)) for c in cols))
    return "\n".join(lines) + "\n"


def worker_count(n_points: int) -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        cap = os.cpu_count() or 1
    else:
        try:
            cap = int(raw)
        except ValueError:
            raise InvalidInputError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
        if cap < 1:
            raise InvalidInputError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return max(1, min(cap, n_points))


def cmd_sweep(cfg: RunConfig) -> int:
    if cfg.axis not in SWEEP_AXES:
        raise InvalidInputError(f"--axis must be one of {', '.join(SWEEP_AXES)}")
    if not cfg.grid:
        raise InvalidInputError("--grid is required for sweep")
    workers = worker_count(len(cfg.grid))
    # the integrator releases the GIL, so threads run points in parallel
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(lambda v: sweep_row(cfg.axis, v, cfg), cfg.grid))
    _write(cfg.output_dir / "sweep.csv", format_sweep(rows))
    for row in rows:
        print(f"{cfg.axis}={row['value']:g}: {row.get('verdict') or row.get('error')}")
    return EXIT_OK


def cmd_sensitivity(cfg: RunConfig, method: str = "central") -> int:
    rep = sensitivity.full_report(cfg.params, method)
    text = rep.to_csv()
    _write(cfg.output_dir / "sensitivity.csv", text)
    sys.stdout.write(text)
    return EXIT_OK


# --- argument handling --------------------------------------------------------

def _parse_grid(text: str) -> tuple:
    try:
        values = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise InvalidInputError(f"--grid must be a comma-separated list of numbers, got {text!r}") from None
    if not values:
        raise InvalidInputError("--grid is empty")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="viraldyn", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group(required=True)
    src.add_argument("--params", type=Path, help="parameter file (name = value lines)")
    src.add_argument("--preset", choices=sorted(PRESETS))
    common.add_argument("--tau", type=float, help="override the delay")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")

    run = argparse.ArgumentParser(add_help=False)
    run.add_argument("--t-end", type=float, default=DEFAULT_T_END)
    run.add_argument("--step", type=float, default=None, help="default: tau/40, or t_end/1e5 at tau = 0")
    run.add_argument("--history", default="auto", help="auto, e1, e2 or T,I,V (constant history)")
    run.add_argument("--transient", type=float, default=analysis.DEFAULT_TRANSIENT,
                     help="fraction of the run discarded before classification")
    run.add_argument("--settle-tol", type=float, default=analysis.DEFAULT_SETTLE_TOL)

    sub.add_parser("simulate", parents=[common, run], help="integrate once and classify the outcome")
    sub.add_parser("stability", parents=[common], help="equilibria and their stability")
    sw = sub.add_parser("sweep", parents=[common, run], help="simulate over a grid of one parameter")
    sw.add_argument("--axis", choices=SWEEP_AXES, required=True)
    sw.add_argument("--grid", required=True, help="comma-separated ascending values")
    sens = sub.add_parser("sensitivity", parents=[common], help="normalised sensitivity of R0")
    sens.add_argument("--method", choices=("central", "analytic"), default="central")
    return parser


def _config(args) -> RunConfig:
    params = load_params(args.params) if args.params is not None else preset(args.preset)
    if args.tau is not None:
        params = params.replace(tau=args.tau)
    return RunConfig(
        params=params,
        history=getattr(args, "history", "auto"),
        t_end=getattr(args, "t_end", DEFAULT_T_END),
        step=getattr(args, "step", None),
        output_dir=args.out,
        transient_fraction=getattr(args, "transient", analysis.DEFAULT_TRANSIENT),
        settle_tol=getattr(args, "settle_tol", analysis.DEFAULT_SETTLE_TOL),
        axis=getattr(args, "axis", None),
        grid=_parse_grid(args.grid) if getattr(args, "grid", None) else (),
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "stability":
            return cmd_stability(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg)
        return cmd_sensitivity(cfg, args.method)
    except (InvalidInputError, ContractError) as exc:
        print(f"viraldyn: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BlowUpError, BracketError, InconsistencyError, RangeError, ViraldynError) as exc:
        print(f"viraldyn: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"viraldyn: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

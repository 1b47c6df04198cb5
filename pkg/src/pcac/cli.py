"""Command-line entry point.

    pcac run <scenario.yaml> [--out DIR] [--seed N] [--no-plots]
    pcac sweep <scenario.yaml> --param <path> --values v1,v2,... [--out DIR]
    pcac verify

Exit codes: 0 success, 1 simulation fault or failed verification,
2 configuration error.
"""

import argparse
import re
import sys

import numpy as np
import yaml

from . import oracles, qp
from .dynamics import VehicleParams
from .harness import (
    ConfigError,
    emit_outputs,
    load_scenario,
    run_scenario,
    scenario_from_dict,
)
from .linear_model import (
    LinearHoverModel,
    build_continuous,
    controllability_matrix,
    true_theta,
)
from .rls import VrfConfig, initial_state, rls_update

__all__ = ["main"]


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="pcac", description="Quadrotor predictive cost adaptive control simulator"
    )
    sub = parser.add_subparsers(dest="cmd", required=True)

    p_run = sub.add_parser("run", help="run one scenario file")
    p_run.add_argument("scenario", help="scenario YAML file")
    p_run.add_argument("--out", default="out", help="output directory")
    p_run.add_argument("--seed", type=int, default=None, help="override scenario seed")
    p_run.add_argument("--no-plots", action="store_true", help="skip plot emission")

    p_sweep = sub.add_parser("sweep", help="run a scenario for several parameter values")
    p_sweep.add_argument("scenario", help="scenario YAML file")
    p_sweep.add_argument("--param", required=True,
                         help="dotted path into the scenario, e.g. theta0 or events[0].scale")
    p_sweep.add_argument("--values", required=True, help="comma-separated values")
    p_sweep.add_argument("--out", default="out", help="output directory")
    p_sweep.add_argument("--no-plots", action="store_true", help="skip plot emission")

    sub.add_parser("verify", help="run the built-in oracle cross-checks")
    return parser


def _summarize(trace, out_paths):
    if trace.fault is not None:
        print(f"FAULT after {len(trace)} steps: {trace.fault}")
    else:
        print(f"completed {len(trace)} steps")
    if len(trace):
        err = trace.tracking_errors
        rms = np.sqrt((err**2).mean(axis=0))
        print(f"per-axis RMS tracking error: {rms[0]:.4f} {rms[1]:.4f} {rms[2]:.4f} m")
    for path in out_paths:
        print(f"wrote {path}")


def _cmd_run(args) -> int:
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario.seed = args.seed
    trace = run_scenario(scenario)
    paths = emit_outputs(trace, args.out, scenario, plots=not args.no_plots)
    _summarize(trace, paths)
    return 0 if trace.fault is None else 1


def _set_path(data, path: str, value):
    keys = re.sub(r"\[(\d+)\]", r".\1", path).split(".")
    target = data
    for key in keys[:-1]:
        target = target[int(key)] if isinstance(target, list) else target[key]
    last = keys[-1]
    if isinstance(target, list):
        target[int(last)] = value
    else:
        target[last] = value


def _cmd_sweep(args) -> int:
    try:
        with open(args.scenario) as fh:
            base = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot load scenario {args.scenario}: {exc}") from exc
    values = [yaml.safe_load(v) for v in args.values.split(",")]
    safe_param = re.sub(r"[^A-Za-z0-9_.-]", "_", args.param)
    status = 0
    for value in values:
        data = yaml.safe_load(yaml.safe_dump(base))
        try:
            _set_path(data, args.param, value)
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise ConfigError(f"cannot set '{args.param}': {exc!r}") from exc
        scenario = scenario_from_dict(data)
        scenario.name = f"{scenario.name}_{safe_param}={value}"
        print(f"--- {scenario.name}")
        trace = run_scenario(scenario)
        paths = emit_outputs(trace, args.out, scenario, plots=not args.no_plots)
        _summarize(trace, paths)
        if trace.fault is not None:
            status = 1
    return status


def _check(name, passed, detail) -> bool:
    print(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
    return passed


def _cmd_verify(_args) -> int:
    rng = np.random.default_rng(7)
    ok = True

    params = VehicleParams(m=4.34, J=np.array([0.082, 0.0845, 0.1377]))
    model = LinearHoverModel.from_params(params, 0.1)
    Ad_q, Bd_q = oracles.zoh_quadrature(model.A, model.B, 0.1)
    diff = max(np.abs(model.Ad - Ad_q).max(), np.abs(model.Bd - Bd_q).max())
    ok &= _check("discretization vs quadrature", diff < 1e-10, f"max abs diff {diff:.2e}")

    A, B = build_continuous(params)
    rank = np.linalg.matrix_rank(controllability_matrix(A, B))
    ok &= _check("controllability", rank == 12, f"rank {rank}")

    theta_star = true_theta(model.Bd)
    vrf = VrfConfig(eta=0.0)
    state = initial_state(np.zeros(12), 1e6)
    y = np.zeros(12)
    phis, targets = [], []
    from .linear_model import assemble_Bd, regressor_diagonal

    Bd = assemble_Bd(theta_star)
    max_err = 0.0
    for k in range(60):
        u = rng.uniform(-3.0, 3.0, 4)
        y_next = model.Ad @ y + Bd @ u
        state = rls_update(state, y_next, y, u, model.Ad, vrf)
        phis.append(regressor_diagonal(u))
        targets.append(y_next - model.Ad @ y)
        batch = oracles.rls_batch_estimates(
            np.array(phis), np.array(targets), np.zeros(12), 1e6 * np.eye(12),
            np.ones(len(phis)),
        )
        max_err = max(max_err, np.abs(state.theta - batch[-1]).max())
        y = y_next
    ok &= _check("RLS vs batch normal equations", max_err < 1e-8,
                 f"max abs deviation {max_err:.2e}")

    worst = 0.0
    for _ in range(50):
        n, m = 4, 8
        Mfac = rng.standard_normal((n, n))
        H = Mfac @ Mfac.T + n * np.eye(n)
        c = rng.standard_normal(n)
        G = rng.standard_normal((m, n))
        h = G @ rng.standard_normal(n) + rng.uniform(0.1, 1.0, m)
        sol = qp.solve(qp.QpProblem(H=H, c=c, G=G, h=h))
        _, obj_ref = oracles.qp_enumeration(H, c, G, h)
        worst = max(worst, abs(sol.objective - obj_ref))
    ok &= _check("QP vs active-set enumeration", worst < 1e-6,
                 f"max objective deviation {worst:.2e}")

    return 0 if ok else 1


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.cmd == "run":
            return _cmd_run(args)
        if args.cmd == "sweep":
            return _cmd_sweep(args)
        return _cmd_verify(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

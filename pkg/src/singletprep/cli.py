"""Command-line entry points that regenerate every result table as CSV/JSON.

Subcommands: gap-scan, optimize, bang-bang, switching, min-time,
robustness.  Settings resolve in precedence order: command-line flags
over a JSON config file (--config) over built-in defaults; config keys
mirror the flag names with underscores.  Output files start with a
comment block echoing the resolved config and the package version, plus
one timestamp line, so reruns are byte-identical apart from that line.

Exit codes: 0 on success, 2 for validation errors, 3 for numerical
failures.
"""

import argparse
import csv
import datetime
import json
import sys

import numpy as np

from . import __version__, dynamics, optimize, pontryagin, robustness
from .errors import NumericalError, ValidationError
from .protocols import linear_protocol, protocol_to_dict

EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

DEFAULTS = {
    "gap-scan": {"n_points": 500, "out": "gap_scan.csv"},
    "optimize": {
        "tau": "0.05:1.0:0.05",
        "n_segments": 10,
        "restarts": 50,
        "seed": 0,
        "case": "minus",
        "linear_segments": 200,
        "out": "optimize.json",
    },
    "bang-bang": {"tau": "0.75", "case": "minus", "out": "bang_bang.json"},
    "switching": {"tau": "0.75", "t_b": "0.1,0.3,0.6", "n_grid": 2001, "out": "switching.csv"},
    "min-time": {
        "threshold": 1e-6,
        "resolution": 1e-4,
        "case": "minus",
        "out": "min_time.json",
    },
    "robustness": {
        "epsilon": "0.005,0.01,0.02,0.04",
        "samples": 100_000,
        "seed": 1234,
        "tau_star": None,
        "tau_0": None,
        "out": "robustness.csv",
    },
}


def _parse_grid(text: str) -> list[float]:
    """Grid syntax: a single number, a comma list, or start:stop:step."""
    text = str(text).strip()
    if not text:
        return []
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValidationError(f"range syntax is start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ValidationError(f"range step must be positive, got {step}")
        values = np.arange(start, stop + 0.5 * step, step)
        return [float(v) for v in values]
    return [float(p) for p in text.split(",") if p.strip()]


def _case_value(name: str) -> int:
    return {"plus": 1, "minus": -1}[name]


def _resolve(command: str, args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS[command])
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            loaded = json.load(fh)
        for key, value in loaded.items():
            key = key.replace("-", "_")
            if key not in cfg:
                raise ValidationError(f"unknown config key {key!r} for {command}")
            cfg[key] = value
    for key in cfg:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    return cfg


def _header_lines(command: str, cfg: dict) -> list[str]:
    echo = json.dumps(cfg, sort_keys=True)
    stamp = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    return [
        f"# singletprep {__version__} {command} config={echo}",
        f"# generated {stamp}",
    ]


def _write_csv(path: str, command: str, cfg: dict, columns: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in _header_lines(command, cfg):
            fh.write(line + "\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        writer.writerows(rows)


def _write_json(path: str, command: str, cfg: dict, payload: dict) -> None:
    doc = {
        "tool": f"singletprep {__version__}",
        "command": command,
        "config": cfg,
        "generated": datetime.datetime.now(datetime.timezone.utc).isoformat(
            timespec="seconds"
        ),
        **payload,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def cmd_gap_scan(cfg: dict) -> None:
    n_points = int(cfg["n_points"])
    bs, gap_plus = dynamics.gap_scan(case=1, n_points=n_points)
    _, gap_minus = dynamics.gap_scan(case=-1, n_points=n_points)
    rows = [(f"{b:.12g}", f"{gp:.12g}", f"{gm:.12g}") for b, gp, gm in zip(bs, gap_plus, gap_minus)]
    _write_csv(cfg["out"], "gap-scan", cfg, ["b", "gap_plus", "gap_minus"], rows)
    if n_points >= 8:
        crossing = dynamics.find_gap_crossing(case=1)
        print(f"equal-fields gap crossing at b = {crossing:.8f}")
    else:
        print("grid too coarse to bracket a crossing")
    print(f"wrote {cfg['out']}")


def cmd_optimize(cfg: dict) -> None:
    taus = _parse_grid(cfg["tau"])
    if not taus:
        raise ValidationError("the tau grid is empty")
    case = _case_value(cfg["case"])
    rows = []
    for tau in taus:
        pwc = optimize.optimize_pwc(
            tau,
            int(cfg["n_segments"]),
            case=case,
            restarts=int(cfg["restarts"]),
            seed=int(cfg["seed"]),
        )
        bb = optimize.optimize_bang_bang(tau, case=case)
        linear = dynamics.error(
            dynamics.evolve(
                dynamics.initial_state(case),
                linear_protocol(tau, int(cfg["linear_segments"]), case=case),
            )
        )
        rows.append(
            {
                "tau": tau,
                "pwc_error": pwc.best_error,
                "bang_bang_error": bb.best_error,
                "linear_error": linear,
                "t_B": bb.t_b,
                "t_J": bb.t_j,
                "protocol": protocol_to_dict(pwc.best_protocol),
            }
        )
    _write_json(cfg["out"], "optimize", cfg, {"rows": rows})
    print(f"wrote {cfg['out']} ({len(rows)} tau values)")


def cmd_bang_bang(cfg: dict) -> None:
    taus = _parse_grid(cfg["tau"])
    if len(taus) != 1:
        raise ValidationError("bang-bang expects a single tau")
    case = _case_value(cfg["case"])
    result = optimize.optimize_bang_bang(taus[0], case=case)
    _write_json(cfg["out"], "bang-bang", cfg, optimize.result_to_dict(result, case=case))
    print(
        f"tau={taus[0]}: t_B={result.t_b:.6f} t_J={result.t_j:.6f} "
        f"error={result.best_error:.3e}"
    )
    print(f"wrote {cfg['out']}")


def cmd_switching(cfg: dict) -> None:
    taus = _parse_grid(cfg["tau"])
    if len(taus) != 1:
        raise ValidationError("switching expects a single tau")
    tau = taus[0]
    n_grid = int(cfg["n_grid"])
    t_bs = _parse_grid(cfg["t_b"])
    solved = pontryagin.solve_switching_time(tau)
    rows = []
    for t_b, tag in [(t, "requested") for t in t_bs] + [(solved, "solved")]:
        trace = pontryagin.switching_trace(tau, t_b, n_grid=n_grid)
        for t, s, regime in trace.csv_rows():
            rows.append((f"{t_b:.10g}", tag, f"{t:.12g}", f"{s:.12g}", regime))
    _write_csv(cfg["out"], "switching", cfg, ["t_b", "kind", "t", "s", "regime"], rows)
    print(f"solved switch time at tau={tau}: t_B = {solved:.8f}")
    print(f"wrote {cfg['out']}")


def cmd_min_time(cfg: dict) -> None:
    case = _case_value(cfg["case"])
    result = optimize.min_time_search(
        case=case,
        error_threshold=float(cfg["threshold"]),
        tau_resolution=float(cfg["resolution"]),
    )
    payload = {
        "tau_star": result.tau_star,
        "tau_0": result.tau_0,
        "bracket_width": result.bracket_width,
    }
    _write_json(cfg["out"], "min-time", cfg, payload)
    print(f"tau_star = {result.tau_star:.6f}, tau_0 = {result.tau_0:.6f}")
    print(f"wrote {cfg['out']}")


def cmd_robustness(cfg: dict) -> None:
    epsilons = _parse_grid(cfg["epsilon"])
    if not epsilons:
        raise ValidationError("the epsilon list is empty")
    if cfg.get("tau_star") is not None and cfg.get("tau_0") is not None:
        tau_star, tau_0 = float(cfg["tau_star"]), float(cfg["tau_0"])
    else:
        times = optimize.min_time_search()
        tau_star, tau_0 = times.tau_star, times.tau_0
    rows, fit = robustness.sweep(
        epsilons, int(cfg["samples"]), int(cfg["seed"]), tau_star, tau_0
    )
    table = []
    for r in rows:
        scale = r.epsilon**2 if r.epsilon > 0 else float("nan")
        table.append(
            (
                f"{r.epsilon:.12g}",
                f"{r.mean_error:.12g}",
                f"{r.std_error:.12g}",
                r.n_samples,
                f"{r.mean_error / scale:.12g}",
                f"{r.std_error / scale:.12g}",
            )
        )
    cfg_echo = dict(cfg)
    cfg_echo["tau_star"] = tau_star
    cfg_echo["tau_0"] = tau_0
    if fit is not None:
        cfg_echo["fit_mean_exponent"] = round(fit.mean_exponent, 6)
        cfg_echo["fit_std_exponent"] = round(fit.std_exponent, 6)
        cfg_echo["reference_mean_over_eps2"] = round(2.0 / 3.0, 6)
        cfg_echo["reference_std_over_eps2"] = 0.647
    _write_csv(
        cfg["out"],
        "robustness",
        cfg_echo,
        ["epsilon", "mean_error", "std_error", "n_samples", "mean_over_eps2", "std_over_eps2"],
        table,
    )
    if fit is not None:
        print(
            f"fitted exponents: mean {fit.mean_exponent:.4f}, std {fit.std_exponent:.4f}"
        )
    print(f"wrote {cfg['out']}")


_HANDLERS = {
    "gap-scan": cmd_gap_scan,
    "optimize": cmd_optimize,
    "bang-bang": cmd_bang_bang,
    "switching": cmd_switching,
    "min-time": cmd_min_time,
    "robustness": cmd_robustness,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="singletprep",
        description="Time-optimal preparation of a two-qubit singlet: "
        "reproduce the gap scan, protocol optimization, switching-function, "
        "and timing-robustness tables.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file (flags override it)")
        p.add_argument("--out", help="output file path")

    p = sub.add_parser("gap-scan", help="two-level gap along the b + j = 1 cut")
    p.add_argument("--n-points", dest="n_points", type=int)
    common(p)

    p = sub.add_parser("optimize", help="optimal vs linear error over a tau grid")
    p.add_argument("--tau", help="single value, comma list, or start:stop:step")
    p.add_argument("--n-segments", dest="n_segments", type=int)
    p.add_argument("--restarts", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--case", choices=["plus", "minus"])
    p.add_argument("--linear-segments", dest="linear_segments", type=int)
    common(p)

    p = sub.add_parser("bang-bang", help="optimal switch times at one tau")
    p.add_argument("--tau")
    p.add_argument("--case", choices=["plus", "minus"])
    common(p)

    p = sub.add_parser("switching", help="switching-function traces")
    p.add_argument("--tau")
    p.add_argument("--t-b", dest="t_b", help="comma list of turn-on delays")
    p.add_argument("--n-grid", dest="n_grid", type=int)
    common(p)

    p = sub.add_parser("min-time", help="critical durations by bisection")
    p.add_argument("--threshold", type=float)
    p.add_argument("--resolution", type=float)
    p.add_argument("--case", choices=["plus", "minus"])
    common(p)

    p = sub.add_parser("robustness", help="timing-jitter Monte Carlo sweep")
    p.add_argument("--epsilon", help="comma list of jitter scales")
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    common(p)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _resolve(args.command, args)
        _HANDLERS[args.command](cfg)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return 0


if __name__ == "__main__":
    sys.exit(main())

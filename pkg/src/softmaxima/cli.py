"""Experiment runner: config ingestion, seeding, and CSV/JSON/SVG emission.

Four commands share one configuration shape:

    estimate      quenched estimates for observables x beta grid
    bounds        every applicable inequality as a verdict row
    rem-sweep     finite-size pressure sandwich (optionally plotted)
    oracle-check  Monte Carlo vs quadrature and the replica identity

Exit codes: 0 success, 1 configuration error, 2 a proved bound came back
`violated`, 3 an oracle comparison failed.  Identical configuration and seed
produce byte-identical output files regardless of worker thread count.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import bounds as bounds_mod
from . import gibbs, quench
from . import rem as rem_mod
from .ensemble import IndexedEnsemble, build_from_covariance, build_iid, from_spec
from .quench import UnboundedThresholdError
from .svgplot import write_line_chart

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_VIOLATION = 2
EXIT_MISMATCH = 3

COMMANDS = ("estimate", "bounds", "rem-sweep", "oracle-check")


class ConfigError(Exception):
    """Invalid configuration; maps to exit code 1."""


@dataclass
class ExperimentConfig:
    command: str
    ensemble_spec: dict | str | None = None
    beta_grid: tuple[float, ...] = (1.0,)
    n_samples: int = 10_000
    seed: int = 0
    c: float = 1.0 / 17.0
    output: str = "softmaxima_run"
    format: str = "csv"
    plot: bool = False
    observables: tuple[str, ...] = ("gibbs_average",)
    n_spins: int | None = None
    nodes: int = 128
    threads: int = 1

    def config_hash(self) -> str:
        """Fingerprint of the semantic fields (worker count and output
        destination deliberately excluded: they may not change results)."""
        payload = {
            "command": self.command,
            "ensemble_spec": self.ensemble_spec,
            "beta_grid": list(self.beta_grid),
            "n_samples": self.n_samples,
            "seed": self.seed,
            "c": self.c,
            "format": self.format,
            "observables": list(self.observables),
            "n_spins": self.n_spins,
            "nodes": self.nodes,
        }
        text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:12]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> _Parser:
    p = _Parser(prog="softmaxima", add_help=True,
                description="Smoothed maxima of finite Gaussian ensembles: "
                            "estimates, bound verdicts, and the REM sandwich.")
    p.add_argument("command", nargs="?", choices=COMMANDS)
    p.add_argument("--config", help="JSON file with ExperimentConfig fields")
    p.add_argument("--ensemble",
                   help="ensemble spec: inline JSON or a path to a JSON file")
    p.add_argument("--n", type=int, help="Monte Carlo samples per estimate")
    p.add_argument("--seed", type=int, help="64-bit master seed")
    p.add_argument("--beta", type=float, help="single inverse temperature")
    p.add_argument("--beta-grid", dest="beta_grid",
                   help='inverse temperature grid "start:stop:step" (inclusive)')
    p.add_argument("--c", type=float, help="Sudakov constant in (0,1)")
    p.add_argument("--out", help="output path prefix")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--plot", action="store_true", default=None,
                   help="emit an SVG chart (rem-sweep)")
    p.add_argument("--observables",
                   help="comma-separated observable names (estimate)")
    p.add_argument("--n-spins", dest="n_spins", type=int,
                   help="REM spin count (rem-sweep)")
    p.add_argument("--nodes", type=int,
                   help="quadrature nodes per dimension (oracle-check)")
    p.add_argument("--threads", type=int, help="worker threads for batch fill")
    return p


def _parse_grid(text: str) -> tuple[float, ...]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(
            f'beta grid must be "start:stop:step", got {text!r}')
    try:
        start, stop, step = (float(v) for v in parts)
    except ValueError:
        raise ConfigError(f"beta grid has non-numeric parts: {text!r}") from None
    if step <= 0 or stop < start:
        raise ConfigError(f"beta grid must ascend with positive step: {text!r}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return tuple(start + step * k for k in range(count))


def parse_config(argv) -> ExperimentConfig:
    args = _build_parser().parse_args(argv)

    data = {}
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(data) - {f.name for f in _config_fields()}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    command = args.command or data.get("command")
    if command not in COMMANDS:
        raise ConfigError(
            f"command must be one of {list(COMMANDS)}, got {command!r}")

    if args.beta is not None and args.beta_grid is not None:
        raise ConfigError("give either --beta or --beta-grid, not both")
    if args.beta is not None:
        grid = (float(args.beta),)
    elif args.beta_grid is not None:
        grid = _parse_grid(args.beta_grid)
    elif "beta_grid" in data:
        raw = data["beta_grid"]
        if isinstance(raw, str):
            grid = _parse_grid(raw)
        else:
            grid = tuple(float(b) for b in raw)
    else:
        grid = (1.0,)

    if args.observables is not None:
        observables = _split_observables(args.observables)
    else:
        observables = tuple(data.get("observables", ("gibbs_average",)))

    cfg = ExperimentConfig(
        command=command,
        ensemble_spec=(args.ensemble if args.ensemble is not None
                       else data.get("ensemble_spec")),
        beta_grid=grid,
        n_samples=_pick(args.n, data, "n_samples", 10_000),
        seed=_pick(args.seed, data, "seed", 0),
        c=_pick(args.c, data, "c", 1.0 / 17.0),
        output=_pick(args.out, data, "output", "softmaxima_run"),
        format=_pick(args.format, data, "format", "csv"),
        plot=bool(_pick(args.plot, data, "plot", False)),
        observables=observables,
        n_spins=_pick(args.n_spins, data, "n_spins", None),
        nodes=_pick(args.nodes, data, "nodes", 128),
        threads=_pick(args.threads, data, "threads", 1),
    )
    _validate(cfg)
    return cfg


def _split_observables(text: str) -> tuple[str, ...]:
    # Commas inside parentheses belong to the observable, e.g. soft_max(0,1).
    parts, buf, depth = [], [], 0
    for ch in text:
        if ch == "," and depth == 0:
            parts.append("".join(buf).strip())
            buf = []
            continue
        depth += ch == "("
        depth -= ch == ")"
        buf.append(ch)
    parts.append("".join(buf).strip())
    return tuple(p for p in parts if p)


def _config_fields():
    return dataclasses.fields(ExperimentConfig)


def _pick(flag_value, data, key, default):
    if flag_value is not None:
        return flag_value
    return data.get(key, default)


def _validate(cfg: ExperimentConfig) -> None:
    if not isinstance(cfg.n_samples, int) or cfg.n_samples < 2:
        raise ConfigError(f"n_samples must be an integer >= 2, got {cfg.n_samples}")
    if not isinstance(cfg.seed, int):
        raise ConfigError(f"seed must be an integer, got {cfg.seed!r}")
    if not (0.0 < cfg.c < 1.0):
        raise ConfigError(f"c must lie in (0, 1), got {cfg.c}")
    if cfg.format not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {cfg.format!r}")
    if len(cfg.beta_grid) == 0:
        raise ConfigError("beta grid must be nonempty")
    if any(b < 0 or not math.isfinite(b) for b in cfg.beta_grid):
        raise ConfigError("beta grid entries must be finite and nonnegative")
    if any(b2 <= b1 for b1, b2 in zip(cfg.beta_grid, cfg.beta_grid[1:])):
        raise ConfigError("beta grid must be strictly increasing")
    if cfg.command in ("estimate", "bounds") and cfg.ensemble_spec is None:
        raise ConfigError(f"{cfg.command} needs an ensemble spec")
    if cfg.command == "rem-sweep" and cfg.n_spins is None:
        raise ConfigError("rem-sweep needs n_spins")
    if cfg.command == "estimate" and not cfg.observables:
        raise ConfigError("estimate needs at least one observable")
    if not isinstance(cfg.threads, int) or cfg.threads < 1:
        raise ConfigError(f"threads must be a positive integer, got {cfg.threads}")


def _resolve_ensemble(spec) -> IndexedEnsemble:
    try:
        if isinstance(spec, dict):
            return from_spec(spec)
        if isinstance(spec, str):
            text = spec.strip()
            if text.startswith("{"):
                return from_spec(json.loads(text))
            with open(text, "r", encoding="utf-8") as fh:
                return from_spec(json.load(fh))
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        raise ConfigError(f"bad ensemble spec: {exc}") from None
    raise ConfigError(f"unsupported ensemble spec: {spec!r}")


# -- emission -------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    text = str(v)
    if "," in text or '"' in text or "\n" in text:
        text = '"' + text.replace('"', '""') + '"'
    return text


def _emit(cfg: ExperimentConfig, headers, rows) -> str:
    path = cfg.output + ("." + cfg.format)
    meta = f"config_hash={cfg.config_hash()} seed={cfg.seed}"
    if cfg.format == "csv":
        lines = [f"# {meta}", ",".join(headers)]
        lines += [",".join(_fmt(v) for v in row) for row in rows]
        payload = "\n".join(lines) + "\n"
    else:
        doc = {"config_hash": cfg.config_hash(), "seed": cfg.seed,
               "rows": [dict(zip(headers, row)) for row in rows]}
        payload = json.dumps(doc, sort_keys=True, indent=1, default=str) + "\n"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(payload)
    return path


# -- command bodies ---------------------------------------------------------------

def _run_estimate(cfg: ExperimentConfig):
    ens = _resolve_ensemble(cfg.ensemble_spec)
    try:
        obs_list = [gibbs.parse_observable(t) for t in cfg.observables]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    headers = ["observable", "beta", "mean", "std_error", "n_samples", "seed"]
    rows = []
    for obs in obs_list:
        for beta in cfg.beta_grid:
            est = quench.mc_estimate(ens, obs, beta, cfg.n_samples, cfg.seed)
            rows.append([obs.name, beta, est.mean, est.std_error,
                         est.n_samples, est.seed])
    return headers, rows, EXIT_OK, None


def _run_bounds(cfg: ExperimentConfig):
    ens = _resolve_ensemble(cfg.ensemble_spec)
    bcfg = bounds_mod.BoundConfig(c=cfg.c)
    n, seed = cfg.n_samples, cfg.seed
    threshold = quench.beta_star(ens, cfg.c, n, seed)

    reports = []
    for beta in cfg.beta_grid:
        reports.append(bounds_mod.g_upper(ens, beta, n, seed, bcfg))
        reports.append(bounds_mod.g_upper_entropy_form(ens, beta, n, seed, bcfg))
        reports.append(bounds_mod.g_lower_lowtemp(ens, beta, threshold, n, seed, bcfg))
        reports.append(bounds_mod.phi_upper(ens, beta, n, seed, bcfg))
        if ens.is_iid:
            reports.append(bounds_mod.g_lower_iid(ens, beta, n, seed, bcfg))
            reports.append(bounds_mod.phi_lower_iid(ens, beta, n, seed, bcfg))
        if beta > 0:
            reports.append(bounds_mod.soft_super_sudakov(ens, beta, n, seed, bcfg))
    reports.extend(bounds_mod.max_bounds(ens, n, seed, bcfg))

    headers = ["name", "beta", "lhs_mean", "lhs_se", "rhs_mean", "rhs_se",
               "slack", "z", "verdict"]
    rows = [[r.name, r.beta, r.lhs[0], r.lhs[1], r.rhs[0], r.rhs[1],
             r.slack, r.z, r.verdict] for r in reports]
    code = (EXIT_VIOLATION
            if any(r.verdict == "violated" for r in reports) else EXIT_OK)
    return headers, rows, code, None


def _run_rem_sweep(cfg: ExperimentConfig):
    model = rem_mod.rem_model(cfg.n_spins)
    curve = rem_mod.pressure_sweep(model, list(cfg.beta_grid), cfg.n_samples,
                                   cfg.seed, cfg.c)
    headers = ["beta", "p_hat", "p_se", "q_lower", "q_upper_min",
               "q_upper_cap", "limit", "sandwich_verdict"]
    rows = [[r.beta, r.p_hat.mean, r.p_hat.std_error, r.q_lower,
             r.q_upper_min, r.q_upper_cap, r.limit, r.sandwich_verdict]
            for r in curve.rows]
    svg_path = None
    if cfg.plot:
        betas = [r.beta for r in curve.rows]
        series = [
            ("pressure", betas, [r.p_hat.mean for r in curve.rows]),
            ("lower", betas, [r.q_lower for r in curve.rows]),
            ("upper min", betas, [r.q_upper_min for r in curve.rows]),
            ("upper cap", betas, [r.q_upper_cap for r in curve.rows]),
            ("limit", betas, [r.limit for r in curve.rows]),
        ]
        svg_path = cfg.output + ".svg"
        write_line_chart(svg_path, series,
                         title=f"REM pressure sandwich, N={model.n_spins}",
                         xlabel="beta", ylabel="pressure")
    code = (EXIT_VIOLATION
            if any(r.sandwich_verdict == "violated" for r in curve.rows)
            else EXIT_OK)
    return headers, rows, code, svg_path


_CHECK_OBSERVABLES = ("gibbs_average", "free_energy", "participation_ratio",
                      "kl_to_uniform", "renyi(0.5)")
_CHECK_BETAS = (0.25, 1.0, 4.0)
# Tensor quadrature of the kinked max integrand converges slowly; give that
# row a fixed allowance on top of the Monte Carlo band.
_MAX_ORACLE_ALLOWANCE = 5e-3
_REPLICA_ORACLE_TOL = 1e-6


def _check_fixtures():
    corr = [[1.0, 0.5, 0.2], [0.5, 1.2, 0.3], [0.2, 0.3, 0.9]]
    return (("iid2", build_iid(2, 1.0)),
            ("corr3", build_from_covariance(["a", "b", "c"], corr)))


def _run_oracle_check(cfg: ExperimentConfig):
    headers = ["check", "ensemble", "observable", "beta", "value_a", "value_b",
               "tol", "status"]
    rows = []
    failed = False
    n, seed, nodes = cfg.n_samples, cfg.seed, cfg.nodes
    for ens_name, ens in _check_fixtures():
        for obs_text in _CHECK_OBSERVABLES:
            obs = gibbs.parse_observable(obs_text)
            for beta in _CHECK_BETAS:
                est = quench.mc_estimate(ens, obs, beta, n, seed)
                oracle = quench.quadrature_oracle(ens, obs, beta, nodes)
                tol = 3.0 * est.std_error
                ok = abs(est.mean - oracle) <= tol
                failed |= not ok
                rows.append(["mc_vs_quadrature", ens_name, obs.name, beta,
                             est.mean, oracle, tol, "pass" if ok else "fail"])
        for beta in _CHECK_BETAS:
            direct = quench.quadrature_oracle(ens, gibbs.GIBBS_AVERAGE, beta, nodes)
            replica = quench.quadrature_oracle(ens, gibbs.REPLICA_GIBBS, beta, nodes)
            ok = abs(direct - replica) <= _REPLICA_ORACLE_TOL
            failed |= not ok
            rows.append(["replica_identity", ens_name, "gibbs_average", beta,
                         direct, replica, _REPLICA_ORACLE_TOL,
                         "pass" if ok else "fail"])
        est = quench.expected_max_estimate(ens, n, seed)
        oracle = quench.quadrature_oracle(ens, gibbs.EXPECTED_MAX, 0.0, nodes)
        tol = 3.0 * est.std_error + _MAX_ORACLE_ALLOWANCE
        ok = abs(est.mean - oracle) <= tol
        failed |= not ok
        rows.append(["mc_vs_quadrature", ens_name, "expected_max", math.inf,
                     est.mean, oracle, tol, "pass" if ok else "fail"])
    return headers, rows, EXIT_MISMATCH if failed else EXIT_OK, None


def run(config: ExperimentConfig) -> int:
    """Execute one configured command; emit files; return the exit code."""
    quench.set_workers(config.threads)
    handler = {"estimate": _run_estimate,
               "bounds": _run_bounds,
               "rem-sweep": _run_rem_sweep,
               "oracle-check": _run_oracle_check}[config.command]
    headers, rows, code, extra = handler(config)
    path = _emit(config, headers, rows)
    written = path if extra is None else f"{path} {extra}"
    print(f"{config.command}: wrote {written} ({len(rows)} rows), exit {code}")
    return code


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    try:
        cfg = parse_config(argv)
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return run(cfg)
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, UnboundedThresholdError, OSError) as exc:
        print(f"error: run: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def entrypoint() -> None:
    sys.exit(main())

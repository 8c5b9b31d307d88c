"""Command-line experiment runner.

Every subcommand writes CSV or JSON into the output directory (``--output``,
else ``$TREXWALK_OUTPUT_DIR``, else the working directory).  Each file opens
with a ``#`` comment block holding the full configuration, one ``key=value``
per line, in the same format ``--config`` reads back.

Exit codes: 0 success, 2 bad configuration or input, 3 a hypothesis of the
transfer analysis fails (use ``--force`` to override where supported),
4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path

import numpy as np

from . import graphs, hitting, localization, protocols, spectral
from .errors import ConfigInvalid, TrexError
from .feshbach import TrexAttachment

OUTPUT_ENV = "TREXWALK_OUTPUT_DIR"


# -- helpers --------------------------------------------------------------------

def _int_list(text):
    try:
        return [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _seeds(text):
    """``20`` means seeds 0..19; ``3,7,9`` lists them."""
    vals = _int_list(text)
    if len(vals) == 1 and "," not in str(text):
        return list(range(vals[0]))
    return vals


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    if isinstance(x, (list, tuple)):
        # a lone value keeps its comma so it reads back as a list
        return ",".join(_fmt(v) for v in x) + ("," if len(x) == 1 else "")
    return str(x)


def config_lines(cfg: dict) -> list:
    return [f"{k}={_fmt(v)}" for k, v in sorted(cfg.items())]


def read_config(path) -> dict:
    """Flat ``key=value`` file; blank lines and ``#`` comments are skipped."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigInvalid(f"cannot read config {path}: {exc}") from None
    for num, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ConfigInvalid(f"{path}:{num}: expected key=value")
        out[key.strip().replace("-", "_")] = val.strip()
    return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _write_json(path: Path, cfg: dict, payload: dict) -> Path:
    body = json.dumps(_jsonable({"config": cfg, **payload}), indent=2, sort_keys=True)
    path.write_text(body + "\n")
    return path


def _write_text(path: Path, text: str) -> Path:
    path.write_text(text)
    return path


def _map(fn, items, jobs):
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as ex:
        return list(ex.map(fn, items))


def _outdir(args) -> Path:
    d = Path(args.output or os.environ.get(OUTPUT_ENV) or ".")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _report_line(payload):
    print(json.dumps(_jsonable(payload), sort_keys=True))


# -- subcommands ----------------------------------------------------------------

def _transfer_attachment(args):
    g = graphs.generate(args.family, args.size)
    a, b = graphs.endpoints(args.family, args.size)
    a = args.alpha or a
    b = args.beta or b
    if args.normalize:
        return TrexAttachment.build(g, a, b, args.delta, normalize=True)
    return TrexAttachment(g, a, b, args.delta)


def cmd_transfer(args, cfg):
    att = _transfer_attachment(args)
    rep = protocols.run_transfer(att, args.horizon_factor, args.grid_points, force=args.force)
    out = _outdir(args)
    stem = f"transfer_{args.family}_{args.size}"
    _write_text(out / f"{stem}.csv", rep.trace.to_csv(config_lines(cfg)))
    payload = {"report": rep.to_dict(), "transfer_probability": rep.transfer_probability}
    if args.bare:
        # same graph with every pendant weight set to 1 (the uniform chain for a path)
        uniform = TrexAttachment(att.base, att.alpha, att.beta, 1.0)
        sd = spectral.eigendecompose(uniform.hamiltonian())
        bare = spectral.fidelity_trace(sd, uniform.pendant_a, uniform.pendant_b, rep.trace.times)
        _write_text(out / f"{stem}_bare.csv", bare.to_csv(config_lines(cfg)))
        payload["bare_peak_fidelity"] = bare.peak_value
        payload["bare_transfer_probability"] = bare.peak_value**2
    _write_json(out / f"{stem}.json", cfg, payload)
    _report_line(payload)
    return 0


def _anderson_one(seed, n, noise, delta, horizon_factor, grid_points, mode, normalize_core, baseline):
    model = localization.NoiseModel.parse(noise, seed)
    return localization.anderson_experiment(n, model, delta, horizon_factor, grid_points, mode=mode,
                                            normalize_core=normalize_core, baseline=baseline)


def cmd_anderson(args, cfg):
    localization.NoiseModel.parse(args.noise)
    fn = partial(_anderson_one, n=args.n, noise=args.noise, delta=args.delta,
                 horizon_factor=args.horizon_factor, grid_points=args.grid_points,
                 mode=args.mode, normalize_core=args.normalize_core, baseline=not args.no_baseline)
    results = _map(fn, args.seeds, args.jobs)
    out = _outdir(args)
    rows = [localization.anderson_row(r) for r in results]
    _write_text(out / "anderson.csv",
                protocols.rows_to_csv(localization.ANDERSON_COLUMNS, rows, config_lines(cfg)))
    summary = localization.anderson_summary(results)
    _write_json(out / "anderson_summary.json", cfg, {"summary": summary})
    _report_line(summary)
    return 0


def _baseline_one(seed, n, noise, horizon, grid_points):
    model = localization.NoiseModel.parse(noise, seed)
    return localization.localization_baseline(n, model, horizon, grid_points)


def cmd_baseline(args, cfg):
    localization.NoiseModel.parse(args.noise)
    seeds = args.seeds
    fn = partial(_baseline_one, n=args.n, noise=args.noise, horizon=args.horizon,
                 grid_points=args.grid_points)
    peaks = _map(fn, seeds, args.jobs)
    out = _outdir(args)
    _write_text(out / "baseline.csv",
                protocols.rows_to_csv(["seed", "peak_fidelity"], zip(seeds, peaks), config_lines(cfg)))
    summary = localization.summarize(peaks)
    _write_json(out / "baseline_summary.json", cfg, {"summary": summary})
    _report_line(summary)
    return 0


def cmd_hitting(args, cfg):
    rep = hitting.hitting_report(args.family, args.sizes, args.delta, args.rho, args.eps,
                                 args.horizon_factor)
    out = _outdir(args)
    _write_text(out / f"hitting_{args.family}.csv",
                protocols.rows_to_csv(hitting.HITTING_COLUMNS, rep.rows(), config_lines(cfg)))
    _report_line({"family": args.family, "fitted_exponents": rep.fitted_exponents})
    return 0


def _scaling_point(N, family, delta, eps, rho, horizon_factor, grid_points):
    att = hitting.instance_attachment(family, N, delta, eps)
    return hitting.quantum_hitting_time(att, rho, horizon_factor, grid_points)


def cmd_scaling(args, cfg):
    delta = args.delta if args.delta is not None else hitting.default_delta(args.family, args.sizes)
    fn = partial(_scaling_point, family=args.family, delta=delta, eps=args.eps, rho=args.rho,
                 horizon_factor=args.horizon_factor, grid_points=args.grid_points)
    pts = dict(zip(args.sizes, _map(fn, args.sizes, args.jobs)))
    res = hitting.scaling_fit(args.family, args.sizes, delta, args.rho, args.eps,
                              time_fn=pts.__getitem__)
    out = _outdir(args)
    _write_json(out / f"scaling_{args.family}.json", cfg, res.to_dict())
    _report_line(res.to_dict())
    return 0


def cmd_resonant(args, cfg):
    base, a, b = hitting.family_instance(args.family, args.size)
    setup = protocols.ResonantSetup.from_graph(base, a, b, args.eps)
    rep = protocols.run_resonant(setup, args.horizon_factor, args.grid_points, force=args.force)
    out = _outdir(args)
    stem = f"resonant_{args.family}_{args.size}"
    _write_text(out / f"{stem}.csv", rep.trace.to_csv(config_lines(cfg)))
    payload = {"report": rep.to_dict(), "effective": rep.effective.to_dict(),
               "overlaps": list(setup.overlaps), "gap": setup.gap}
    _write_json(out / f"{stem}.json", cfg, payload)
    _report_line(payload["report"])
    return 0


def cmd_search(args, cfg):
    g = graphs.generate(args.family, args.size)
    ok, t = hitting.edge_oracle_search(g, args.oracle, args.probe, args.delta, args.rho,
                                       args.horizon_factor, force=args.force)
    payload = {"success": ok, "time": t}
    _write_json(_outdir(args) / f"search_{args.family}_{args.size}.json", cfg, payload)
    _report_line(payload)
    return 0


def _compare_one(N, coupling, strong_eps, horizon_factor, grid_points):
    g = graphs.generate("path", N)
    sd = spectral.eigendecompose(g.matrix)
    delta = coupling * sd.min_abs()
    rep = protocols.run_transfer(TrexAttachment(g, 1, N, delta), horizon_factor, grid_points)
    Q, t0 = protocols.strong_potential_bounds(2, N - 1, math.inf, strong_eps)
    return protocols.comparison_row("path", N, delta, rep) + [Q, t0]


def cmd_compare_strong(args, cfg):
    if any(N % 2 for N in args.sizes):
        raise ConfigInvalid("compare-strong uses even path lengths (nonsingular bases)")
    fn = partial(_compare_one, coupling=args.coupling, strong_eps=args.strong_eps,
                 horizon_factor=args.horizon_factor, grid_points=args.grid_points)
    rows = _map(fn, args.sizes, args.jobs)
    cols = protocols.COMPARISON_COLUMNS + ["strong_Q", "strong_t0_bound"]
    _write_text(_outdir(args) / "compare_strong.csv", protocols.rows_to_csv(cols, rows, config_lines(cfg)))
    for r in rows:
        _report_line(dict(zip(cols, r)))
    return 0


def cmd_graph_dump(args, cfg):
    g = graphs.quotient(args.family, args.size) if args.quotient else graphs.generate(args.family, args.size)
    text = g.to_json(indent=2, sort_keys=True) + "\n"
    name = f"graph_{args.family}_{args.size}{'_quotient' if args.quotient else ''}.json"
    _write_text(_outdir(args) / name, text)
    print(text, end="")
    return 0


# -- parser -----------------------------------------------------------------------

def _common(p, horizon=True):
    p.add_argument("--config", help="key=value file; command-line flags override it")
    p.add_argument("--output", help=f"output directory (default ${OUTPUT_ENV} or .)")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    if horizon:
        p.add_argument("--horizon-factor", type=float, default=protocols.HORIZON_FACTOR)
        p.add_argument("--grid-points", type=int, default=protocols.GRID_POINTS)


FAMILIES = [k.value for k in graphs.FamilyKind]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="trexwalk", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transfer", help="pendant-to-pendant transfer on a family member")
    _common(p)
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--alpha", type=int)
    p.add_argument("--beta", type=int)
    p.add_argument("--normalize", action="store_true", help="scale the base to unit spectral norm")
    p.add_argument("--bare", action="store_true", help="also trace the same graph with unit pendant weights")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("anderson", help="disordered chain with calibrated control loop")
    _common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--noise", required=True, help="cauchy:SCALE, uniform:HALFWIDTH or none")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--seeds", type=_seeds, default=_seeds("20"))
    p.add_argument("--mode", choices=["exact", "experimental"], default="exact")
    p.add_argument("--normalize-core", action="store_true")
    p.add_argument("--no-baseline", action="store_true")
    p.set_defaults(func=cmd_anderson)

    p = sub.add_parser("baseline", help="bare disordered chain, no protocol")
    _common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--noise", required=True)
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--seeds", type=_seeds, default=_seeds("20"))
    p.set_defaults(func=cmd_baseline)

    for name, func, helptext in (("hitting", cmd_hitting, "classical and quantum hitting times"),
                                 ("scaling", cmd_scaling, "log-log fit of quantum hitting times")):
        p = sub.add_parser(name, help=helptext)
        _common(p)
        p.add_argument("--family", choices=FAMILIES, required=True)
        p.add_argument("--sizes", type=_int_list, required=True)
        p.add_argument("--delta", type=float)
        p.add_argument("--eps", type=float, default=hitting.EPS_DEFAULT)
        p.add_argument("--rho", type=float, default=hitting.RHO_DEFAULT)
        p.set_defaults(func=func)

    p = sub.add_parser("resonant", help="transfer through the kernel vector of a singular base")
    _common(p)
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--eps", type=float, default=hitting.EPS_DEFAULT)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_resonant)

    p = sub.add_parser("search", help="pendant-edge oracle search")
    _common(p)
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--oracle", type=int, required=True)
    p.add_argument("--probe", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--rho", type=float, default=hitting.RHO_DEFAULT)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("compare-strong", help="weak pendant coupling against strong-loop bounds")
    _common(p)
    p.add_argument("--sizes", type=_int_list, required=True)
    p.add_argument("--coupling", type=float, default=hitting.COUPLING_BUDGET,
                   help="delta * kappa on the unit-norm base")
    p.add_argument("--strong-eps", type=float, default=0.1)
    p.set_defaults(func=cmd_compare_strong)

    p = sub.add_parser("graph-dump", help="write a family member as JSON")
    _common(p, horizon=False)
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--quotient", action="store_true")
    p.set_defaults(func=cmd_graph_dump)
    return ap


def _peek_config(argv):
    """(command, config path) from raw argv, before required flags are checked."""
    command = path = None
    it = iter(argv)
    for tok in it:
        if tok == "--config":
            path = next(it, None)
        elif tok.startswith("--config="):
            path = tok.split("=", 1)[1]
        elif command is None and not tok.startswith("-"):
            command = tok
    return command, path


def _apply_config(parser, argv):
    """Parse argv with values from --config installed as subcommand defaults."""
    argv = list(sys.argv[1:] if argv is None else argv)
    command, path = _peek_config(argv)
    choices = parser._subparsers._group_actions[0].choices
    if path is None or command not in choices:
        return parser.parse_args(argv)
    sub = choices[command]
    known = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, raw in read_config(path).items():
        if key == "command":
            if raw != command:
                raise ConfigInvalid(f"config is for {raw!r}, not {command!r}")
            continue
        action = known.get(key)
        if action is None or key in ("config", "help"):
            raise ConfigInvalid(f"unknown config key {key!r} for {command}")
        if action.nargs == 0:
            defaults[key] = raw.lower() in ("1", "true", "yes", "on")
        elif raw in ("None", ""):
            defaults[key] = None
        else:
            try:
                val = action.type(raw) if action.type else raw
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise ConfigInvalid(f"bad value for {key}: {exc}") from None
            if action.choices and val not in action.choices:
                raise ConfigInvalid(f"{key} must be one of {sorted(action.choices)}")
            defaults[key] = val
    for a in sub._actions:
        if a.dest in defaults:
            a.required = False
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def args_to_config(args) -> dict:
    """The experiment configuration: every flag except plumbing."""
    skip = {"func", "config", "output", "jobs"}
    cfg = {"command": args.command}
    cfg.update({k: v for k, v in vars(args).items() if k not in skip and k != "command"})
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        cfg = args_to_config(args)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args, cfg)
    except TrexError as exc:
        err = {"error": type(exc).__name__, "message": str(exc), "exit_code": exc.exit_code}
        print(json.dumps(err), file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

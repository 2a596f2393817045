"""``chainbounds`` command-line runner.

Subcommands: ``toy1``, ``toy2``, ``bounds``, ``pac`` and ``check``. Option
values resolve as command-line flag, then ``--config`` JSON, then the
built-in default; the default seed may come from ``CHAINBOUNDS_SEED``.
The resolved options are echoed at the top of every report.

Errors print one ``CODE: detail`` line on stderr and exit with a status
unique to the code (see :data:`EXIT_CODES`). Usage errors exit with 2,
failing property checks with 1.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

from . import __version__
from .checks import SUITES, run_suite
from .engine import fmt
from .errors import ChainBoundsError, ConfigError
from .io import load_channel_file, load_config, write_channel_file
from .montecarlo import MCConfig
from .nets import parse_net_spec
from .pac_bayes import PacSchedule, PosteriorOnNets, alpha_heuristic_bound, chained_pac_bound, pac_bound
from .presets import evaluate_preset, get_preset
from .toy_models import (
    Toy1Config,
    toy1_analytic,
    toy1_channel,
    toy1_engine,
    toy1_mc_unchained,
    toy2_gap_analytic,
    toy2_gap_quadrature,
    toy2_mc_unchained,
    toy2_w1_brackets,
)

SEED_ENV = "CHAINBOUNDS_SEED"

# Status 1 is reserved for failing checks and 2 for usage errors.
_CODES = (
    "IO_ERROR", "PARSE_ERROR", "BAD_CONFIG", "MISSING_COORDS", "UNKNOWN_PRESET", "MISSING_NET", "MISSING_INPUT",
    "BAD_NET_SPEC", "LEVEL_OUT_OF_RANGE", "OUT_OF_DOMAIN", "DIM_MISMATCH", "NO_TAIL_CAP", "MARGINAL_MISMATCH",
    "SAMPLE_COUNT_MISMATCH", "SHAPE_MISMATCH", "SUM_NOT_ONE", "NEGATIVE_MASS", "NON_FINITE", "DUPLICATE_LABEL",
    "ZERO_MASS_CONDITION", "U_NOT_UNIFORM", "BAD_INDEX", "BAD_COORDS", "UNKNOWN_DIVERGENCE", "BAD_EXPONENT",
    "BAD_XI", "BAD_M", "BAD_HOLDER", "BAD_AGGREGATE", "BAD_DELTA", "BAD_LAMBDA", "BAD_KL", "BAD_ALPHA",
    "BAD_SCHEDULE", "SCHEDULE_TOO_DEEP", "BAD_POSTERIOR", "INCONSISTENT_POSTERIOR", "INCONSISTENT_PRIOR",
    "BAD_LEVEL", "LP_FAILED", "UNSUPPORTED", "EMPTY",
)
EXIT_CODES = {code: 10 + i for i, code in enumerate(_CODES)}
EXIT_OTHER = 99

DEFAULTS = {
    "toy1": {"resolution_offset": 10, "mc_samples": 100_000, "seed": 0, "format": "csv"},
    "toy2": {"a": [1.0, 2.0, 4.0, 8.0], "mc_samples": 100_000, "seed": 0, "n_points": 512, "format": "csv"},
    "bounds": {"xi": 1.0, "m": None, "p": 2.0, "format": "json"},
    "pac": {"mode": "chained", "xi": 1.0, "m": 1, "delta": 0.05, "net": "nested-dyadic:1:8", "depth": None,
            "alpha": None, "lambdas": None, "posterior_point": None, "posterior_points": None,
            "posterior_probs": None, "as_printed": False, "kl": None, "lambda": None, "format": "json"},
    "check": {"seed": 0, "format": "json"},
}


class UsageError(Exception):
    pass


def parse_k_stars(text) -> list[int]:
    """``"3"``, ``"1..6"`` or ``"1,2,5"``; a list of ints passes through."""
    if isinstance(text, int):
        return [text]
    if isinstance(text, list):
        return [int(x) for x in text]
    text = str(text).strip()
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return list(range(int(lo), int(hi) + 1))
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise ConfigError("BAD_CONFIG", f"cannot parse k-star list {text!r}") from None


def _floats(text) -> list[float]:
    if isinstance(text, (int, float)):
        return [float(text)]
    if isinstance(text, list):
        return [float(x) for x in text]
    try:
        return [float(x) for x in str(text).split(",")]
    except ValueError:
        raise ConfigError("BAD_CONFIG", f"cannot parse number list {text!r}") from None


def resolve(command: str, args: argparse.Namespace) -> dict:
    """Merge flags over the config file over defaults; record where the seed came from."""
    file_cfg = load_config(getattr(args, "config", None))
    defaults = dict(DEFAULTS[command])
    seed_source = "default"
    if "seed" in defaults and os.environ.get(SEED_ENV):
        try:
            defaults["seed"] = int(os.environ[SEED_ENV])
        except ValueError:
            raise ConfigError("BAD_CONFIG", f"{SEED_ENV} must be an integer") from None
        seed_source = "env"
    cfg = dict(defaults)
    for k, v in file_cfg.items():
        cfg[k.replace("-", "_")] = v
        if k == "seed":
            seed_source = "config"
    for k, v in vars(args).items():
        if k in ("command", "config", "func", "out") or v is None:
            continue
        cfg[k] = v
        if k == "seed":
            seed_source = "flag"
    if "seed" in cfg:
        cfg["seed_source"] = seed_source
    cfg["command"] = command
    cfg["version"] = __version__
    return cfg


def _header(cfg: dict) -> str:
    return "# config: " + json.dumps(cfg, sort_keys=True) + "\n"


def _csv(rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for r in rows:
        w.writerow([fmt(x) if isinstance(x, float) else x for x in r])
    return buf.getvalue()


def _json(cfg: dict, payload) -> str:
    return json.dumps({"config": cfg, "result": payload}, indent=2, sort_keys=False) + "\n"


def _num(x):
    if isinstance(x, float) and not math.isfinite(x):
        return "+inf" if x > 0 else ("-inf" if x < 0 else "nan")
    return x


# --- subcommands --------------------------------------------------------------------


def run_toy1(cfg: dict) -> str:
    if cfg.get("k_star") is None:
        raise UsageError("toy1 needs --k-star")
    rows = []
    for k_star in parse_k_stars(cfg["k_star"]):
        res = cfg.get("resolution")
        res = k_star + int(cfg["resolution_offset"]) if res is None else int(res)
        tc = Toy1Config(k_star, resolution=res)
        ana = toy1_analytic(tc)
        eng = toy1_engine(tc)
        row = {"k_star": k_star, "theta": tc.theta, "resolution": res}
        for q in ("gap", "b_l", "b_ltilde", "b_grad", "b_cmi"):
            row[f"{q}_analytic"] = ana[q]
            val = eng[q]
            row[f"{q}_engine"] = val if isinstance(val, float) else val.value
            if not isinstance(val, float):
                row[f"{q}_engine_tail"] = val.tail_bound
        n = int(cfg["mc_samples"])
        if n >= 2:
            est = toy1_mc_unchained(tc, MCConfig(n, int(cfg["seed"])))
            row["b_ltilde_mc"], row["b_ltilde_mc_stderr"] = est.mean, est.stderr
        row["ratio_b_grad_b_ltilde"] = row["b_grad_engine"] / row["b_ltilde_engine"]
        rows.append(row)
        if cfg.get("export_channel"):
            path = Path(cfg["export_channel"])
            if len(parse_k_stars(cfg["k_star"])) > 1:
                path = path.with_name(f"{path.stem}_k{k_star}{path.suffix}")
            write_channel_file(toy1_channel(tc), path)
    if cfg["format"] == "json":
        return _json(cfg, [{k: _num(v) for k, v in r.items()} for r in rows])
    cols = list(rows[0])
    for r in rows[1:]:
        cols += [c for c in r if c not in cols]
    return _header(cfg) + _csv([cols] + [[r.get(c, "") for c in cols] for r in rows])


def run_toy2(cfg: dict) -> str:
    rows = []
    n = int(cfg["mc_samples"])
    for a in _floats(cfg["a"]):
        lo, hi = toy2_w1_brackets(a)
        rows.append([a, "gap", toy2_gap_analytic(a), "", "analytic"])
        rows.append([a, "gap", toy2_gap_quadrature(a), "", "engine"])
        rows.append([a, "b_l_lower", lo, "", "analytic"])
        rows.append([a, "b_l_upper", hi, "", "analytic"])
        if n >= 2:
            est = toy2_mc_unchained(a, MCConfig(n, int(cfg["seed"])), int(cfg["n_points"]))
            rows.append([a, "b_l", est.mean, est.stderr, "mc"])
    if cfg["format"] == "json":
        keys = ("parameter", "quantity", "value", "stderr", "source")
        return _json(cfg, [dict(zip(keys, [_num(x) if x != "" else None for x in r])) for r in rows])
    return _header(cfg) + _csv([["parameter", "quantity", "value", "stderr", "source"]] + rows)


def run_bounds(cfg: dict) -> str:
    for key in ("channel", "preset"):
        if cfg.get(key) is None:
            raise UsageError(f"bounds needs --{key}")
    preset = get_preset(cfg["preset"])
    kind, data = load_channel_file(cfg["channel"])
    net = parse_net_spec(cfg["net"]) if cfg.get("net") else None
    k_trunc = cfg.get("k_trunc")
    if net is not None and k_trunc is None:
        k_trunc = net.depth
    slot = {
        "full": ("channel", "channel"),
        "per-sample": ("channels", "channels"),
        "super-sample": ("supersample", "ssc"),
        "per-sample-super-sample": ("supersamples", "sscs"),
    }[preset.block]
    if kind != slot[0]:
        raise ConfigError("MISSING_INPUT", f"preset {preset.name} needs a {slot[0]!r} file, got {kind!r}")
    rep = evaluate_preset(
        preset.name, **{slot[1]: data}, net=net, k_trunc=k_trunc, xi=float(cfg["xi"]),
        m=None if cfg.get("m") is None else int(cfg["m"]), p=float(cfg["p"]),
    )
    if cfg["format"] == "csv":
        return _header(cfg) + rep.to_csv()
    return _json(cfg, rep.to_dict())


def run_pac(cfg: dict) -> str:
    mode = cfg["mode"]
    xi, m, delta = float(cfg["xi"]), int(cfg["m"]), float(cfg["delta"])
    if mode == "standard":
        if cfg.get("kl") is None or cfg.get("lambda") is None:
            raise UsageError("pac --mode standard needs --kl and --lambda")
        kl_term = math.inf if str(cfg["kl"]) in ("inf", "+inf") else float(cfg["kl"])
        value = pac_bound(xi, m, float(cfg["lambda"]), delta, kl_term)
        payload = {"value": _num(value)}
        if cfg["format"] == "csv":
            return _header(cfg) + _csv([["quantity", "value"], ["pac_bound", value]])
        return _json(cfg, payload)
    net = parse_net_spec(cfg["net"])
    depth = net.depth if cfg.get("depth") is None else int(cfg["depth"])
    if cfg.get("posterior_points") is not None:
        post = PosteriorOnNets.from_points(net, depth, cfg["posterior_points"], cfg.get("posterior_probs"))
    elif cfg.get("posterior_point") is not None:
        post = PosteriorOnNets.dirac(net, depth, _floats(cfg["posterior_point"]))
    else:
        raise UsageError("pac needs --posterior-point or posterior_points in the config file")
    if mode == "alpha":
        if cfg.get("alpha") is None:
            raise UsageError("pac --mode alpha needs --alpha")
        deltas = PacSchedule.geometric_deltas(delta, depth)
        rep = alpha_heuristic_bound(xi, m, net, float(cfg["alpha"]), deltas, post, as_printed=bool(cfg["as_printed"]))
    elif mode == "chained":
        if cfg.get("lambdas") is not None:
            sched = PacSchedule.geometric(delta, depth, _floats(cfg["lambdas"]))
        else:
            # log 2 per level matches a Dirac posterior against uniform priors on a binary-refining net
            sched = PacSchedule.alpha(delta, depth, float(cfg.get("alpha") or math.log(2.0)))
        rep = chained_pac_bound(xi, m, net, sched, post)
    else:
        raise ConfigError("BAD_CONFIG", f"unknown pac mode {mode!r}")
    if cfg["format"] == "csv":
        return _header(cfg) + rep.to_csv()
    return _json(cfg, rep.to_dict())


def run_check(cfg: dict) -> tuple[str, bool]:
    suite = cfg.get("suite")
    if suite is None:
        raise UsageError("check needs --suite")
    if suite != "all" and suite not in SUITES:
        raise UsageError(f"unknown suite {suite!r}; choose from {', '.join(SUITES + ('all',))}")
    results = run_suite(suite, seed=int(cfg["seed"]))
    ok = all(r.passed for r in results)
    payload = {"passed": ok, "suites": [r.to_dict() for r in results]}
    if cfg["format"] == "csv":
        rows = [["suite", "check", "passed", "n_cases", "n_failed", "first_counterexample"]]
        for r in results:
            for c in r.checks:
                rows.append([r.name, c.name, c.passed, c.n_cases, c.n_failed, c.counterexamples[0] if c.counterexamples else ""])
        return _header(cfg) + _csv(rows), ok
    return _json(cfg, payload), ok


# --- parser -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chainbounds", description="Chained information-theoretic generalisation bounds.")
    p.add_argument("--version", action="version", version=f"chainbounds {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        sp.add_argument("--config", help="JSON file of option values (flags take precedence)")
        sp.add_argument("--out", help="output file (default: stdout)")
        sp.add_argument("--format", choices=("csv", "json"))
        if seed:
            sp.add_argument("--seed", type=int, help=f"base seed (default: ${SEED_ENV} or 0)")

    t1 = sub.add_parser("toy1", help="uniform / quadratic toy model: closed forms vs engine vs Monte Carlo")
    t1.add_argument("--k-star", dest="k_star", help="k* value, range 'a..b' or list 'a,b,c'")
    t1.add_argument("--resolution", type=int, help="discretisation depth (default k* + 10)")
    t1.add_argument("--mc-samples", dest="mc_samples", type=int, help="Monte Carlo sample count (0 to skip)")
    t1.add_argument("--export-channel", dest="export_channel", help="also write the discretised channel as JSON")
    common(t1)

    t2 = sub.add_parser("toy2", help="Gaussian direction on the circle: gap, brackets and Monte Carlo")
    t2.add_argument("--a", help="comma-separated mean offsets (default 1,2,4,8)")
    t2.add_argument("--mc-samples", dest="mc_samples", type=int)
    t2.add_argument("--n-points", dest="n_points", type=int, help="quadrature nodes along the ray")
    common(t2)

    b = sub.add_parser("bounds", help="evaluate a preset on a channel file")
    b.add_argument("--channel", help="channel JSON file")
    b.add_argument("--preset", help="preset name, e.g. w1, chained-w1, ss-mi")
    b.add_argument("--net", help="net spec: dyadic:DIM:K, nested-dyadic:DIM:K or circle:K")
    b.add_argument("--k-trunc", dest="k_trunc", type=int, help="truncation level (default: net depth)")
    b.add_argument("--xi", type=float)
    b.add_argument("--m", type=int)
    b.add_argument("--p", type=float, help="power-divergence exponent")
    common(b, seed=False)

    pc = sub.add_parser("pac", help="standard, chained or alpha-schedule PAC-Bayes bounds")
    pc.add_argument("--mode", choices=("standard", "chained", "alpha"))
    pc.add_argument("--xi", type=float)
    pc.add_argument("--m", type=int)
    pc.add_argument("--delta", type=float)
    pc.add_argument("--kl", help="KL term for --mode standard ('inf' allowed)")
    pc.add_argument("--lambda", dest="lambda", type=float, help="lambda for --mode standard")
    pc.add_argument("--net", help="net spec (default nested-dyadic:1:8)")
    pc.add_argument("--depth", type=int, help="schedule depth K (default: net depth)")
    pc.add_argument("--alpha", type=float)
    pc.add_argument("--lambdas", help="comma-separated lambda_1..lambda_K")
    pc.add_argument("--posterior-point", dest="posterior_point", help="Dirac posterior location, comma-separated coords")
    pc.add_argument("--as-printed", dest="as_printed", action="store_const", const=True)
    common(pc, seed=False)

    ck = sub.add_parser("check", help="run randomised property suites")
    ck.add_argument("--suite", help=f"one of {', '.join(SUITES)}, all")
    common(ck)
    return p


_RUN = {"toy1": run_toy1, "toy2": run_toy2, "bounds": run_bounds, "pac": run_pac}


def _emit(text: str, out: str | None) -> None:
    if out:
        try:
            Path(out).write_text(text)
        except OSError as exc:
            raise ConfigError("IO_ERROR", f"{out}: {exc.strerror or exc}") from None
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args.command, args)
        status = 0
        if args.command == "check":
            text, ok = run_check(cfg)
            status = 0 if ok else 1
        else:
            text = _RUN[args.command](cfg)
        _emit(text, args.out)
        return status
    except UsageError as exc:
        sys.stderr.write(parser.format_usage())
        sys.stderr.write(f"USAGE: {exc}\n")
        return 2
    except ChainBoundsError as exc:
        detail = " ".join(str(exc.message).split())
        sys.stderr.write(f"{exc.code}: {detail}\n")
        return EXIT_CODES.get(exc.code, EXIT_OTHER)
    except (ValueError, ArithmeticError, OSError) as exc:
        sys.stderr.write(f"ERROR: {' '.join(str(exc).split())}\n")
        return EXIT_OTHER


if __name__ == "__main__":
    sys.exit(main())

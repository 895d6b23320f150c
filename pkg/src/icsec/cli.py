"""``icsec`` command line: run one experiment and write its CSV/JSON artifacts.

Exit status: 0 on success, 2 on an invalid configuration, 3 when the
instance is infeasible (a diagnostic JSON is still written).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .alignment import PhiMapping, aligned_fraction, aligned_set
from .cf import own_message_rate
from .channel import ChannelMatrix, ChannelSpec, even_channel, sample_channel
from .lattice import (crypto_chain, crypto_lemma_check, quantization_entropy_check,
                      toy_end_to_end)
from .power import fixed_fraction_family, uniform_profile
from .report import Report, emit_report, write_atomic
from .secrecy import dof_sweep, secure_rate_report

SUBCOMMANDS = ("rates", "sweep", "align", "toy", "check")

COMMON = {"K": 4, "seed": 0, "channel": "uniform(0.5,1.5)"}
DEFAULTS = {
    "align": {"K": [4, 6], "T": [2, 3, 4]},
    "rates": {"T": 2, "P": 1e4, "jam_share": 0.5, "jam_cap": True, "radius": "auto"},
    "sweep": {"T": 2, "P_grid": [1e2, 1e3, 1e4, 1e5, 1e6], "jam_share": 0.5,
              "jam_cap": True, "fixed_fractions": False, "radius": "auto"},
    "toy": {"P": 1e4, "M": 1, "jam_share": 0.5, "snr_db": [40, -10], "trials": 1000,
            "blocks": 32, "n": 1, "rate_bits": 2, "receiver": 0, "radius": "auto"},
    "check": {"q": [2, 4, 8, 16, 32, 64], "components": [1, 4], "samples": 1_000_000,
              "P": 1.0, "entropy_gains": [1.0, 1.0]},
}


class ConfigError(ValueError):
    pass


class Infeasible(ValueError):
    pass


def _schema() -> dict:
    return json.loads(resources.files("icsec").joinpath("config.schema.json").read_text())


def resolve_config(sub: str, file_cfg: dict | None = None, overrides: dict | None = None) -> dict:
    """Defaults, then the config file, then command-line overrides."""
    file_cfg = dict(file_cfg or {})
    try:
        jsonschema.validate(file_cfg, _schema())
    except jsonschema.ValidationError as e:
        raise ConfigError(f"invalid config: {e.message}") from None
    if file_cfg.get("subcommand", sub) != sub:
        raise ConfigError(f"config is for {file_cfg['subcommand']!r}, not {sub!r}")
    cfg = {**COMMON, **DEFAULTS[sub], **file_cfg, **(overrides or {})}
    cfg["subcommand"] = sub
    allowed = set(COMMON) | set(DEFAULTS[sub]) | {"subcommand", "gains"}
    if sub in ("rates", "sweep"):
        allowed.add("M")
    extra = sorted(set(cfg) - allowed)
    if extra:
        raise ConfigError(f"keys not used by {sub!r}: {', '.join(extra)}")
    for k in ("K", "T"):
        vals = cfg[k] if isinstance(cfg.get(k), list) else [cfg.get(k)]
        if k == "K" and any(v is not None and v < 3 for v in vals):
            raise ConfigError("K must be ≥ 3")
        if k == "T" and any(v is not None and v < 1 for v in vals):
            raise ConfigError("T must be ≥ 1")
    if sub != "align" and isinstance(cfg["K"], list):
        raise ConfigError(f"{sub!r} takes a single K")
    if sub in ("rates", "sweep") and isinstance(cfg["T"], list):
        raise ConfigError(f"{sub!r} takes a single T")
    try:
        ChannelSpec.parse(cfg["channel"])
    except ValueError as e:
        raise ConfigError(str(e)) from None
    if "gains" in cfg:
        g = np.asarray(cfg["gains"], dtype=float)
        if g.shape != (cfg["K"], cfg["K"]):
            raise ConfigError(f"gains must be a {cfg['K']}x{cfg['K']} matrix")
    return cfg


def _channel(cfg) -> ChannelMatrix:
    if "gains" in cfg:
        try:
            H = ChannelMatrix(np.asarray(cfg["gains"], dtype=float), seed=cfg["seed"])
        except ValueError as e:
            raise ConfigError(str(e)) from None
    else:
        H = sample_channel(cfg["K"], cfg["channel"], cfg["seed"])
    return even_channel(H, cfg["channel"])


def run_align(cfg) -> Report:
    Ks = cfg["K"] if isinstance(cfg["K"], list) else [cfg["K"]]
    Ts = cfg["T"] if isinstance(cfg["T"], list) else [cfg["T"]]
    rows = []
    for K in Ks:
        if K % 2:
            raise ConfigError(f"alignment needs even K (got {K}); odd K is padded only for rates")
        for T in Ts:
            mp = PhiMapping(K, T)
            sizes = {len(aligned_set(u, i, mp)) for u in range(K) for i in range(K) if i != u}
            if len(sizes) != 1:
                raise Infeasible(f"aligned set sizes differ across pairs at K={K}, T={T}: {sizes}")
            (s,) = sizes
            rows.append({"K": K, "T": T, "M": mp.M, "|S|": s, "fraction": s / mp.M})
    closed = {f"K={r['K']},T={r['T']}": float(aligned_fraction(r["K"], r["T"])) if r["T"] >= 2 else 0.0
              for r in rows}
    return Report("align", rows, cfg, {"closed_form": closed})


def _mapping(cfg, H):
    mp = PhiMapping(H.K, cfg["T"])
    M = cfg.get("M", mp.M)
    return mp, M, M != mp.M


def run_rates(cfg) -> Report:
    H = _channel(cfg)
    mp, M, override = _mapping(cfg, H)
    prof = uniform_profile(H, cfg["P"], M, cfg["jam_share"], cap=cfg["jam_cap"])
    summary = {"K_effective": H.K, "dummy": list(H.dummy), "M": M, "M_override": override}
    if override:
        # compute-and-forward only: no alignment, so no penalty
        rows = [{"user": u, "R_comb": own_message_rate(u, H, prof, cfg["radius"],
                                                         enforce_cap=cfg["jam_cap"])}
                for u in H.real_users]
        return Report("rates", rows, cfg, summary)
    if cfg["T"] < 2:
        raise Infeasible("T=1 leaves no aligned dimension; the leakage penalty is undefined")
    rep = secure_rate_report(H, prof, mp, cfg["radius"], enforce_cap=cfg["jam_cap"])
    summary.update(sum_rate=rep.sum_rate, ssdf=rep.ssdf)
    if H.dummy:
        summary["sum_rate_with_dummy"] = rep.sum_rate_with_dummy
    return Report("rates", rep.rows(), cfg, summary)


def run_sweep(cfg) -> Report:
    H = _channel(cfg)
    mp, M, override = _mapping(cfg, H)
    if override:
        raise ConfigError("sweep needs M = T^(2K-2); M overrides are for rates only")
    if cfg["T"] < 2:
        raise Infeasible("T=1 leaves no aligned dimension; the leakage penalty is undefined")
    P = cfg["P_grid"]
    if cfg["fixed_fractions"]:
        profiles = fixed_fraction_family(H, P, M, cfg["jam_share"], cap=cfg["jam_cap"])
    else:
        profiles = [uniform_profile(H, p, M, cfg["jam_share"], cap=cfg["jam_cap"]) for p in P]
    res = dof_sweep(H, P, cfg["T"], cfg["jam_share"], cap=cfg["jam_cap"],
                    radius=cfg["radius"], profiles=sorted(profiles, key=lambda p: p.P))
    summary = {"slope": res.slope, "intercept": res.intercept,
               "penalty_spread": res.penalty_spread, "K_effective": H.K}
    return Report("sweep", res.rows(), cfg, summary)


def run_toy(cfg) -> Report:
    H = _channel(cfg)
    if not 0 <= cfg["receiver"] < H.K:
        raise ConfigError(f"receiver must lie in 0..{H.K - 1}")
    prof = uniform_profile(H, cfg["P"], cfg["M"], cfg["jam_share"])
    rows = []
    for snr in cfg["snr_db"]:
        r = toy_end_to_end(H, prof, receiver=cfg["receiver"], snr_db=snr,
                           rate_bits=cfg["rate_bits"], n=cfg["n"], blocks=cfg["blocks"],
                           trials=cfg["trials"], seed=cfg["seed"], radius=cfg["radius"])
        p = r.error_rate
        rows.append({"check": "toy_end_to_end", "statistic": f"error_rate@{snr:g}dB",
                     "value": p, "bound": None, "stderr": math.sqrt(p * (1 - p) / r.trials)})
    return Report("toy", rows, cfg, {"a": [int(x) for x in r.a], "beta": r.beta,
                                     "fine_step": r.fine_step})


def run_check(cfg) -> Report:
    rows = []
    for q in cfg["q"]:
        c = crypto_lemma_check(crypto_chain(q), q)
        rows.append({"check": "crypto_lemma", "statistic": f"tv@q={q}",
                     "value": float(c.tv), "bound": 0.0, "stderr": 0.0})
        rows.append({"check": "crypto_lemma", "statistic": f"mutual_information@q={q}",
                     "value": c.mutual_information, "bound": 0.0, "stderr": 0.0})
    q = max(cfg["q"])
    broken = crypto_lemma_check(crypto_chain(q), q, jammer_support=range(q // 2))
    rows.append({"check": "crypto_lemma_broken", "statistic": f"tv@q={q}",
                 "value": float(broken.tv), "bound": 0.0, "stderr": 0.0})
    h, g = cfg["entropy_gains"]
    for M in cfg["components"]:
        pm = [cfg["P"] / M] * M
        e = quantization_entropy_check((h, g), pm, pm, 1, cfg["samples"], cfg["seed"])
        rows.append({"check": "quantization_entropy", "statistic": f"H@M={M}",
                     "value": e.entropy, "bound": e.bound, "stderr": e.stderr})
    return Report("check", rows, cfg)


RUNNERS = {"align": run_align, "rates": run_rates, "sweep": run_sweep,
           "toy": run_toy, "check": run_check}


def run(cfg: dict) -> Report:
    return RUNNERS[cfg["subcommand"]](cfg)


def write_outputs(report: Report, out: Path, plot: bool = False) -> list[Path]:
    paths = []
    for fmt in ("csv", "json"):
        p = out / f"{report.kind}.{fmt}"
        write_atomic(p, emit_report(report, fmt))
        paths.append(p)
    if plot:
        from .plotting import plot_report
        paths.append(plot_report(report, out / f"{report.kind}.png"))
    return paths


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="icsec", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="JSON configuration file")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        p.add_argument("--plot", action="store_true", help="also render a PNG figure")
        if name in ("rates", "sweep"):
            p.add_argument("--no-jam-cap", action="store_true")
        if name in ("rates", "sweep", "toy"):
            p.add_argument("--jam-share", type=float)
        if name == "sweep":
            p.add_argument("--fixed-fractions", action="store_true")
        if name in ("rates", "toy"):
            p.add_argument("--components", type=int, metavar="M",
                           help="components per user (rates: compute-and-forward only)")
        if name == "check":
            p.add_argument("--components", type=int, nargs="+", metavar="M",
                           help="component counts for the entropy check")
    return ap


def _overrides(args) -> dict:
    o = {}
    if args.seed is not None:
        o["seed"] = args.seed
    if getattr(args, "no_jam_cap", False):
        o["jam_cap"] = False
    if getattr(args, "jam_share", None) is not None:
        o["jam_share"] = args.jam_share
    if getattr(args, "fixed_fractions", False):
        o["fixed_fractions"] = True
    if getattr(args, "components", None):
        o["components" if args.subcommand == "check" else "M"] = args.components
    return o


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    sub = args.subcommand
    try:
        file_cfg = json.loads(args.config.read_text()) if args.config else {}
        if not isinstance(file_cfg, dict):
            raise ConfigError("config must be a JSON object")
        cfg = resolve_config(sub, file_cfg, _overrides(args))
        report = run(cfg)
    except (ConfigError, json.JSONDecodeError, OSError) as e:
        print(f"icsec {sub}: {e}", file=sys.stderr)
        return 2
    except (Infeasible, ValueError) as e:
        print(f"icsec {sub}: infeasible: {e}", file=sys.stderr)
        diag = {"subcommand": sub, "error": str(e), "config": locals().get("cfg")}
        write_atomic(args.out / f"{sub}.infeasible.json",
                     (json.dumps(diag, indent=2, sort_keys=True, default=str) + "\n").encode())
        return 3
    for p in write_outputs(report, args.out, args.plot):
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())

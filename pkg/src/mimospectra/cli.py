"""Experiment runner CLI.

Subcommands:

* ``run``       -- execute a named preset (or explicit JSON config) and write
                  a result envelope plus plot-data CSVs.
* ``support``   -- evaluate a support-boundary solver for a params file.
* ``stieltjes`` -- evaluate one law at one complex point.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.  Worker
thread count comes from the MIMOSPECTRA_WORKERS environment variable.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, rmt, sim
from .channel import SystemParams
from .errors import ConfigError, NumericalError

POWER_DB_KEYS = {"signal_power", "interference_power"}

_SYSTEM_KEYS = {"scenario", "num_antennas", "users_per_cell", "num_cells",
                "block_length", "aoa_counts", "signal_power", "interference_power",
                "noise_enabled", "spacing_ratio"}
_KIND_KEYS = {
    "eigen": {"trials", "terms"},
    "saturation": {"trials", "num_aoas", "m_physical"},
    "ber": {"ratios_db", "snr_db", "bits_target", "m_values"},
    "ber_aoa": {"ratios_db", "snr_db", "bits_target", "p_values", "include_iid"},
    "ber_distinct": {"ratios_db", "snr_db", "bits_target", "p4_values"},
    "ber_short": {"ratios_db", "snr_db", "bits_target", "n_values"},
    "support_plot": {"modes"},
}
_COMMON_KEYS = {"kind", "label", "seed"} | _SYSTEM_KEYS


def _preset_table() -> dict[str, dict]:
    """Paper-scale preset configs; desk scale halves M and the AoA counts."""
    base = dict(scenario="identical_aoas", num_antennas=400, users_per_cell=5,
                num_cells=4, block_length=1000, aoa_counts=[200],
                signal_power_db=-10.0, interference_power_db=-16.0,
                noise_enabled=False, spacing_ratio=2.0)
    ratios = [-12.0, -10.5, -9.0, -7.5, -6.0, -4.5, -3.0, -1.5, 0.0]
    table = {
        "fig1": dict(base, kind="support_plot", modes=["onesided", "iid"]),
        "fig2": dict(base, kind="support_plot", modes=["double", "iid"]),
        "fig3": dict(base, kind="eigen", trials=20),
        "fig4": dict(base, kind="saturation", num_aoas=100, m_physical=600,
                     trials=500),
        "fig5": dict(base, kind="eigen", scenario="distinct_aoas",
                     aoa_counts=[200, 200, 200, 200], trials=20),
        "fig6": dict(base, kind="eigen", scenario="distinct_aoas",
                     aoa_counts=[200, 200, 200, 20], trials=20),
        "fig7": dict(kind="ber", scenario="identical_aoas", num_antennas=400,
                     users_per_cell=5, num_cells=4, block_length=400,
                     aoa_counts=[200], noise_enabled=True, spacing_ratio=0.5,
                     snr_db=-5.0, ratios_db=ratios, bits_target=200_000,
                     m_values=[200, 400, 600]),
        "fig8": dict(kind="ber_distinct", scenario="distinct_aoas", num_antennas=400,
                     users_per_cell=5, num_cells=4, block_length=400,
                     aoa_counts=[100, 100, 100, 100], noise_enabled=True,
                     spacing_ratio=0.5, snr_db=-5.0, ratios_db=ratios,
                     bits_target=200_000, p4_values=[10, 20, 50, 100]),
        "fig9": dict(kind="ber_short", scenario="iid", num_antennas=400,
                     users_per_cell=15, num_cells=4, block_length=120,
                     noise_enabled=True, spacing_ratio=0.5, snr_db=0.0,
                     ratios_db=ratios, bits_target=200_000, n_values=[30, 60, 120]),
        "intro-ratio": dict(kind="ber_aoa", scenario="identical_aoas",
                            num_antennas=200, users_per_cell=5, num_cells=2,
                            block_length=400, aoa_counts=[100], noise_enabled=True,
                            spacing_ratio=0.5, snr_db=0.0, ratios_db=ratios,
                            bits_target=200_000, p_values=[25, 50, 100],
                            include_iid=True),
    }
    table["intro-saturation"] = dict(table["fig7"])
    for name, cfg in table.items():
        cfg["label"] = name
    return table


PRESETS = _preset_table()


def _desk_scale(cfg: dict) -> dict:
    out = dict(cfg)
    out["num_antennas"] = max(1, out["num_antennas"] // 2)
    if out.get("aoa_counts"):
        out["aoa_counts"] = [max(out.get("users_per_cell", 1), p // 2)
                             for p in out["aoa_counts"]]
    if "m_physical" in out:
        out["m_physical"] = max(1, out["m_physical"] // 2)
        out["num_aoas"] = max(1, out["num_aoas"] // 2)
    if "m_values" in out:
        out["m_values"] = [max(1, m // 2) for m in out["m_values"]]
    if "trials" in out:
        out["trials"] = max(2, out["trials"] // 2)
    if "bits_target" in out:
        out["bits_target"] = max(10_000, out["bits_target"] // 2)
    return out


def _convert_db_keys(cfg: dict) -> dict:
    out = {}
    for key, val in cfg.items():
        if key.endswith("_db") and key[:-3] in POWER_DB_KEYS:
            out[key[:-3]] = 10.0 ** (float(val) / 10.0)
        else:
            out[key] = val
    return out


def parse_config(raw: dict) -> dict:
    """Validate a raw config dict: fill defaults, reject unknown keys."""
    cfg = _convert_db_keys(raw)
    kind = cfg.get("kind")
    if kind not in _KIND_KEYS:
        raise ConfigError(f"config.kind={kind!r}; expected one of {sorted(_KIND_KEYS)}")
    allowed = _COMMON_KEYS | _KIND_KEYS[kind]
    unknown = set(cfg) - allowed
    if unknown:
        raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
    cfg.setdefault("seed", 1234)
    cfg.setdefault("label", kind)
    if kind in ("ber", "ber_aoa", "ber_distinct", "ber_short"):
        for key in ("snr_db", "ratios_db", "bits_target"):
            if key not in cfg:
                raise ConfigError(f"config.{key} is required for kind={kind}")
        cfg["signal_power"] = sim.snr_db_to_signal_power(float(cfg["snr_db"]))
        cfg.setdefault("interference_power", cfg["signal_power"])
        cfg.setdefault("noise_enabled", True)
    if kind == "eigen":
        cfg.setdefault("trials", 20)
        cfg.setdefault("terms", "all")
        cfg.setdefault("noise_enabled", False)
    # build SystemParams early so dimension errors surface as config errors
    cfg["_system"] = system_params_from_config(cfg)
    return cfg


def system_params_from_config(cfg: dict) -> SystemParams:
    try:
        return SystemParams(
            num_antennas=int(cfg["num_antennas"]),
            users_per_cell=int(cfg["users_per_cell"]),
            num_cells=int(cfg["num_cells"]),
            block_length=int(cfg["block_length"]),
            aoa_counts=tuple(int(p) for p in cfg.get("aoa_counts", ())),
            signal_power=float(cfg.get("signal_power", 1.0)),
            interference_power=float(cfg.get("interference_power", 0.0)),
            noise_enabled=bool(cfg.get("noise_enabled", True)),
            spacing_ratio=float(cfg.get("spacing_ratio", 2.0)),
            scenario=str(cfg.get("scenario", "identical_aoas")),
        )
    except KeyError as exc:
        raise ConfigError(f"missing required config key: {exc.args[0]}") from exc


def load_config(preset: str | None, config_path: str | None, scale: str,
                overrides: dict) -> dict:
    if preset is None and config_path is None:
        raise ConfigError("either --preset or --config is required")
    raw: dict = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; available: {sorted(PRESETS)}")
        raw.update(PRESETS[preset])
        if scale == "desk":
            raw = _desk_scale(raw)
    if config_path is not None:
        path = Path(config_path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            raw.update(json.loads(path.read_text()))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    raw.update(overrides)
    return parse_config(raw)


# ---------------------------------------------------------------------------
# payload builders
# ---------------------------------------------------------------------------

def _support_payload(sup: rmt.SpectralSupport | None):
    return None if sup is None else [[lo, hi] for lo, hi in sup.intervals]


def _eigen_payload(result: sim.EigenExperimentResult) -> dict:
    payload = {
        "samples_per_trial": [s.tolist() for s in result.samples_per_trial],
        "supports": {name: _support_payload(sup)
                     for name, sup in result.supports.items()},
    }
    if result.truncation is not None:
        payload["truncation"] = {
            "ratio_triple": result.truncation.ratio_triple,
            "ratio_pairwise": result.truncation.ratio_pairwise,
            "flags": result.truncation.flags,
        }
    return payload


def _ber_payload(results: dict[str, sim.BerResult]) -> dict:
    return {scheme: [dataclasses.asdict(p) for p in res.points]
            for scheme, res in results.items()}


def _run_kind(cfg: dict) -> dict:
    kind = cfg["kind"]
    seed = int(cfg["seed"])
    params: SystemParams = cfg["_system"]
    if kind == "eigen":
        res = sim.run_eigen_experiment(params, int(cfg["trials"]), seed,
                                       terms=cfg["terms"])
        return {"eigen": _eigen_payload(res)}
    if kind == "saturation":
        phys, iid = sim.run_saturation_experiment(int(cfg["num_aoas"]),
                                                  int(cfg["m_physical"]),
                                                  params, int(cfg["trials"]), seed)
        return {"saturation": {"physical": _eigen_payload(phys),
                               "iid": _eigen_payload(iid)}}
    if kind == "ber":
        out = {}
        for m in cfg.get("m_values") or [params.num_antennas]:
            p = dataclasses.replace(params, num_antennas=int(m))
            out[f"M={m}"] = _ber_payload(sim.run_ber_experiment(
                p, cfg["ratios_db"], int(cfg["bits_target"]), seed))
        iid_params = dataclasses.replace(params, scenario="iid", aoa_counts=())
        out["iid"] = _ber_payload(sim.run_ber_experiment(
            iid_params, cfg["ratios_db"], int(cfg["bits_target"]), seed))
        return {"ber": out}
    if kind == "ber_aoa":
        out = {}
        for p_count in cfg["p_values"]:
            p = dataclasses.replace(params, aoa_counts=(int(p_count),) * params.num_cells)
            out[f"P={p_count}"] = _ber_payload(sim.run_ber_experiment(
                p, cfg["ratios_db"], int(cfg["bits_target"]), seed))
        if cfg.get("include_iid", True):
            iid_params = dataclasses.replace(params, scenario="iid", aoa_counts=())
            out["iid"] = _ber_payload(sim.run_ber_experiment(
                iid_params, cfg["ratios_db"], int(cfg["bits_target"]), seed))
        return {"ber": out}
    if kind == "ber_distinct":
        fam = sim.run_distinct_aoa_ber(params, cfg["p4_values"], cfg["ratios_db"],
                                       int(cfg["bits_target"]), seed)
        return {"ber": {f"P4={p4}": _ber_payload(res) for p4, res in fam.items()}}
    if kind == "ber_short":
        fam = sim.run_short_coherence_ber(cfg["n_values"], float(cfg["snr_db"]),
                                          cfg["ratios_db"], int(cfg["bits_target"]),
                                          seed, num_antennas=params.num_antennas,
                                          num_users=params.users_per_cell,
                                          num_cells=params.num_cells)
        return {"ber": {f"N={n}": _ber_payload(res) for n, res in fam.items()}}
    if kind == "support_plot":
        n = params.block_length
        out = {}
        for mode in cfg["modes"]:
            if mode == "onesided":
                sig = rmt.support_onesided(rmt.OneSidedParams.signal(params))
                intf = rmt.support_onesided(rmt.OneSidedParams.interference(params))
                out["onesided_signal"] = _support_payload(sig.scaled(n))
                out["onesided_interference"] = _support_payload(intf.scaled(n))
            elif mode == "double":
                sup, rep = rmt.support_double_sided(rmt.DoubleSidedParams.from_system(params))
                out["double_sided"] = _support_payload(sup.scaled(n))
                out["truncation_flags"] = rep.flags
            elif mode == "iid":
                k, l, m = params.users_per_cell, params.num_cells, params.num_antennas
                sig = rmt.support_iid(params.signal_power, k / m, k / n)
                out["iid_signal"] = _support_payload(sig.scaled(n))
                if l > 1 and params.interference_power > 0:
                    intf = rmt.support_iid(params.interference_power,
                                           k * (l - 1) / m, k * (l - 1) / n)
                    out["iid_interference"] = _support_payload(intf.scaled(n))
            else:
                raise ConfigError(f"unknown support mode {mode!r}")
        return {"supports": out}
    raise ConfigError(f"unhandled kind {kind!r}")


# ---------------------------------------------------------------------------
# envelopes and plot data
# ---------------------------------------------------------------------------

def config_hash(cfg: dict) -> str:
    clean = {k: v for k, v in cfg.items() if not k.startswith("_")}
    return hashlib.sha256(json.dumps(clean, sort_keys=True).encode()).hexdigest()[:16]


def run_preset(cfg: dict, out_dir: Path) -> Path:
    """Run the configured experiment, write envelope + CSVs, return the
    envelope path.  Partial outputs are removed on failure."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    t0 = time.time()
    try:
        payload = _run_kind(cfg)
        envelope = {
            "config": {k: v for k, v in cfg.items() if not k.startswith("_")},
            "config_hash": config_hash(cfg),
            "library_version": __version__,
            "seed": int(cfg["seed"]),
            "wall_clock_s": round(time.time() - t0, 3),
            "payload": payload,
        }
        env_path = out_dir / f"{cfg['label']}_result.json"
        env_path.write_text(json.dumps(envelope, indent=1, sort_keys=True))
        written.append(env_path)
        written.extend(emit_plot_data(envelope, out_dir))
        return env_path
    except Exception:
        for path in written:
            path.unlink(missing_ok=True)
        raise


def _csv_header(envelope: dict) -> str:
    return f"# config_hash={envelope['config_hash']} seed={envelope['seed']}\n"


def _write_eigen_csv(name: str, eigen: dict, envelope: dict, out_dir: Path,
                     bins: int = 60) -> Path:
    pooled = np.concatenate([np.asarray(t) for t in eigen["samples_per_trial"]])
    if pooled.size == 0:
        raise ConfigError("no data: eigen payload holds no samples")
    density, edges = np.histogram(pooled, bins=bins, density=True)
    centers = 0.5 * (edges[:-1] + edges[1:])
    supports = [(sname, iv) for sname, ivs in eigen.get("supports", {}).items()
                if ivs for iv in ivs]
    lines = [_csv_header(envelope)]
    cols = ["bin_center", "density"]
    for j, (sname, _) in enumerate(supports):
        cols += [f"support_lo_{j}_{sname}", f"support_hi_{j}_{sname}"]
    lines.append(",".join(cols) + "\n")
    for i, (c, d) in enumerate(zip(centers, density)):
        row = [repr(float(c)), repr(float(d))]
        for _, (lo, hi) in supports:
            row += ([repr(float(lo)), repr(float(hi))] if i == 0 else ["", ""])
        lines.append(",".join(row) + "\n")
    path = out_dir / f"{envelope['config']['label']}_{name}_hist.csv"
    path.write_text("".join(lines))
    return path


def _write_ber_csv(ber: dict, envelope: dict, out_dir: Path) -> Path:
    lines = [_csv_header(envelope),
             "family,scheme,ratio_db_or_snr,ber,ci_lo,ci_hi,bits\n"]
    for family, schemes in ber.items():
        for scheme, points in schemes.items():
            for p in sorted(points, key=lambda q: q["sweep_value"]):
                lines.append(",".join([
                    family, scheme, repr(float(p["sweep_value"])),
                    repr(float(p["ber"])), repr(float(p["ci_lo"])),
                    repr(float(p["ci_hi"])), str(int(p["bits"])),
                ]) + "\n")
    path = out_dir / f"{envelope['config']['label']}_ber.csv"
    path.write_text("".join(lines))
    return path


def _write_support_csv(supports: dict, envelope: dict, out_dir: Path) -> Path:
    lines = [_csv_header(envelope), "law,interval_index,lo,hi\n"]
    for name, ivs in supports.items():
        if name == "truncation_flags" or ivs is None:
            continue
        for j, (lo, hi) in enumerate(ivs):
            lines.append(f"{name},{j},{lo!r},{hi!r}\n")
    path = out_dir / f"{envelope['config']['label']}_supports.csv"
    path.write_text("".join(lines))
    return path


def emit_plot_data(envelope: dict, out_dir: Path) -> list[Path]:
    """Write plot-ready CSVs for whatever the envelope payload holds."""
    payload = envelope.get("payload") or {}
    if not payload:
        raise ConfigError("no data: envelope payload is empty")
    out_dir = Path(out_dir)
    paths = []
    if "eigen" in payload:
        paths.append(_write_eigen_csv("eigen", payload["eigen"], envelope, out_dir))
        supports = payload["eigen"].get("supports") or {}
        if any(v for v in supports.values()):
            paths.append(_write_support_csv(supports, envelope, out_dir))
    if "saturation" in payload:
        for name in ("physical", "iid"):
            paths.append(_write_eigen_csv(name, payload["saturation"][name],
                                          envelope, out_dir))
    if "ber" in payload:
        paths.append(_write_ber_csv(payload["ber"], envelope, out_dir))
    if "supports" in payload:
        paths.append(_write_support_csv(payload["supports"], envelope, out_dir))
    if not paths:
        raise ConfigError("no data: payload holds no recognized sections")
    return paths


# ---------------------------------------------------------------------------
# law/support parameter files
# ---------------------------------------------------------------------------

def _load_params_file(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"params file not found: {p}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {p}: {exc}") from exc


def _take(d: dict, keys: set, where: str) -> dict:
    unknown = set(d) - keys
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(unknown)}")
    missing = keys - set(d)
    if missing:
        raise ConfigError(f"missing key(s) in {where}: {sorted(missing)}")
    return d


def cmd_stieltjes(args) -> int:
    d = _load_params_file(args.params)
    s = complex(args.s_re, args.s_im)
    if args.law == "mp":
        g = rmt.mp_stieltjes(s, **_take(d, {"ratio"}, "mp params"))
    elif args.law == "onesided":
        g = rmt.stieltjes_onesided(
            s, rmt.OneSidedParams(**_take(d, {"scale", "inner_dim", "m", "n", "p"},
                                          "onesided params")))
    elif args.law == "iid":
        g = rmt.stieltjes_iid_limit(s, **_take(d, {"p_s", "alpha", "gamma"},
                                               "iid params"))
    elif args.law == "double":
        g = rmt.stieltjes_double_sided(
            s, rmt.DoubleSidedParams(**_take(
                d, {"num_users", "num_cells", "num_antennas", "block_length",
                    "num_aoas", "p_signal", "p_interference"}, "double params")))
    else:
        raise ConfigError(f"unknown law {args.law!r}")
    ev = rmt.StieltjesEval(argument=s, value=complex(g), law=args.law)
    print(json.dumps({"law": ev.law, "s": [ev.argument.real, ev.argument.imag],
                      "G": [ev.value.real, ev.value.imag]}))
    return 0


def cmd_support(args) -> int:
    d = _load_params_file(args.params)
    if args.mode == "onesided":
        sup = rmt.support_onesided(rmt.OneSidedParams(
            **_take(d, {"scale", "inner_dim", "m", "n", "p"}, "onesided params")))
        report = None
    elif args.mode == "double":
        sup, report = rmt.support_double_sided(rmt.DoubleSidedParams(
            **_take(d, {"num_users", "num_cells", "num_antennas", "block_length",
                        "num_aoas", "p_signal", "p_interference"}, "double params")))
    elif args.mode == "distinct":
        sup = rmt.support_distinct(**_take(
            d, {"num_users", "num_cells", "num_antennas", "block_length",
                "num_aoas", "p_interference"}, "distinct params"))
        report = None
    else:
        raise ConfigError(f"unknown mode {args.mode!r}")
    out = {"mode": args.mode, "intervals": _support_payload(sup)}
    if report is not None:
        out["truncation_flags"] = report.flags
    print(json.dumps(out))
    return 0


def cmd_run(args) -> int:
    overrides = {}
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, val = item.partition("=")
        try:
            overrides[key] = json.loads(val)
        except json.JSONDecodeError:
            overrides[key] = val
    cfg = load_config(args.preset, args.config, args.scale, overrides)
    if args.seed is not None:
        cfg["seed"] = args.seed
    env_path = run_preset(cfg, Path(args.out))
    print(env_path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mimospectra",
        description="Eigenvalue-spectrum and BER experiments for the "
                    "finite-AoA massive-MIMO subspace estimator.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment preset")
    p_run.add_argument("--preset", choices=sorted(PRESETS), default=None)
    p_run.add_argument("--config", default=None, help="JSON config file")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--scale", choices=("desk", "paper"), default="paper")
    p_run.add_argument("--out", default="results")
    p_run.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key (JSON-parsed value)")
    p_run.set_defaults(func=cmd_run)

    p_sup = sub.add_parser("support", help="support-boundary solver")
    p_sup.add_argument("--mode", required=True,
                       choices=("onesided", "double", "distinct"))
    p_sup.add_argument("--params", required=True, help="JSON params file")
    p_sup.set_defaults(func=cmd_support)

    p_st = sub.add_parser("stieltjes", help="evaluate one law at one point")
    p_st.add_argument("--law", required=True,
                      choices=("mp", "onesided", "iid", "double"))
    p_st.add_argument("--s-re", type=float, required=True, dest="s_re")
    p_st.add_argument("--s-im", type=float, required=True, dest="s_im")
    p_st.add_argument("--params", required=True, help="JSON params file")
    p_st.set_defaults(func=cmd_stieltjes)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

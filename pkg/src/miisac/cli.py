"""Command-line front end.

Subcommands:
  crb      -- joint/single CRB sweep over range, conductivity, or pilot count
  penalty  -- correlation and joint-estimation penalty sweep
  mle      -- Monte Carlo MLE validation sweep (CRB columns + trial statistics)
  figures  -- canonical sweep CSVs for the three standard figures

Every run resolves its configuration (JSON file + flag overrides) into an
explicit dict that is embedded in the output's metadata preamble, so any
CSV can be reproduced from its own header. Output files are written to a
temp file and atomically renamed; data rows are deterministic given the
seed (timestamps live only in `#` metadata lines).
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field

from .estimation import MleConfig
from .fisher import SingularFimError, crb_report
from .montecarlo import TrialSpec, TrialStats, run_batch
from .physics import (
    MEDIUM_PRESETS,
    CoilSpec,
    DomainError,
    LinkConfig,
    Theta,
    alpha,
    dbm_to_watts,
    kappa_r,
    snr_db,
)

SCHEMA_VERSION = "miisac-sweep v1"
CONVERGENCE_THRESHOLD = 0.99

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_CONVERGENCE = 3

AXES = ("range", "conductivity", "pilots")

BASE_COLUMNS = [
    "axis", "swept_value", "medium", "sigma_sm", "r_m", "f0_hz", "pilots_l",
    "p_tx_w", "z_ref_ohm", "alpha_1pm", "alpha_r", "kappa_r", "rho",
    "penalty_linear", "penalty_db", "crb_r_joint_m2", "crb_r_single_m2",
    "crb_sigma_joint_sm2", "crb_sigma_single_sm2", "snr_db", "singular",
    "config_hash",
]

MC_COLUMNS = [
    "mc_n_trials", "mc_seed", "mc_mean_r_m", "mc_var_r_m2", "mc_rmse_r_m",
    "mc_mean_sigma_sm", "mc_var_sigma_sm2", "mc_rmse_sigma_sm",
    "mc_var_r_cond_m2", "mc_empirical_penalty_db", "mc_convergence_rate",
]


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


@dataclass
class SweepSpec:
    """Fully resolved sweep: axis, values, scenario, media, optional MC block."""

    axis: str
    values: list[float]
    link: LinkConfig
    fixed_r: float | None
    fixed_sigma: float | None
    media: list[tuple[str, float]]       # (label, sigma) pairs
    mle: MleConfig = field(default_factory=MleConfig)
    mc: dict | None = None               # {"n_trials": int, "seed": int}

    def resolved(self) -> dict:
        """Plain-dict form embedded in output metadata; fully reconstructs the run."""
        return {
            "link": {
                "f0_hz": self.link.f0,
                "coil_radius_m": self.link.coil.radius_a,
                "coil_turns": self.link.coil.turns_n,
                "z_ref_ohm": self.link.z_ref,
                "p_tx_w": self.link.p_tx,
                "pilots": self.link.pilots_l,
                "bandwidth_hz": self.link.bandwidth_b,
                "temp_k": self.link.temp_t0,
            },
            "sweep": {
                "axis": self.axis,
                "values": list(self.values),
                "media": [[label, sigma] for label, sigma in self.media],
                "fixed": {"r_m": self.fixed_r, "sigma_sm": self.fixed_sigma},
            },
            "mle": {
                "r_bounds": list(self.mle.r_bounds),
                "sigma_bounds": list(self.mle.sigma_bounds),
                "starts_per_axis": self.mle.starts_per_axis,
                "simplex_tol": self.mle.simplex_tol,
                "max_iters": self.mle.max_iters,
            },
            "mc": dict(self.mc) if self.mc else None,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.resolved(), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _expand_values(values) -> list[float]:
    if isinstance(values, (list, tuple)):
        out = [float(v) for v in values]
    elif isinstance(values, dict):
        start, stop = float(values["start"]), float(values["stop"])
        count = int(values["count"])
        spacing = values.get("spacing", "log")
        if count < 1:
            raise ConfigError("values.count must be >= 1")
        if count == 1:
            out = [start]
        elif spacing == "log":
            if start <= 0 or stop <= 0:
                raise ConfigError("log spacing requires positive endpoints")
            la, lb = math.log(start), math.log(stop)
            out = [math.exp(la + (lb - la) * i / (count - 1)) for i in range(count)]
        elif spacing == "linear":
            out = [start + (stop - start) * i / (count - 1) for i in range(count)]
        else:
            raise ConfigError(f"unknown spacing {spacing!r}")
    else:
        raise ConfigError("sweep.values must be a list or a start/stop/count dict")
    if not out:
        raise ConfigError("sweep.values is empty")
    if any(v <= 0 for v in out):
        raise ConfigError("all swept values must be positive")
    return out


def _parse_media(entries) -> list[tuple[str, float]]:
    media: list[tuple[str, float]] = []
    for e in entries:
        if isinstance(e, str) and e in MEDIUM_PRESETS:
            media.append((e, MEDIUM_PRESETS[e]))
        else:
            try:
                sigma = float(e)
            except (TypeError, ValueError):
                raise ConfigError(f"unknown medium {e!r}; presets: {sorted(MEDIUM_PRESETS)}")
            media.append((f"sigma={sigma:g}", sigma))
    return media


def _parse_link(link: dict) -> LinkConfig:
    if "p_tx_w" in link and "p_tx_dbm" in link:
        raise ConfigError("give p_tx_w or p_tx_dbm, not both")
    p_tx = float(link["p_tx_w"]) if "p_tx_w" in link else dbm_to_watts(float(link.get("p_tx_dbm", 0.0)))
    try:
        return LinkConfig(
            coil=CoilSpec(
                radius_a=float(link.get("coil_radius_m", 0.15)),
                turns_n=int(link.get("coil_turns", 20)),
            ),
            f0=float(link.get("f0_hz", 10e3)),
            z_ref=float(link.get("z_ref_ohm", 50.0)),
            p_tx=p_tx,
            pilots_l=int(link.get("pilots", 100)),
            bandwidth_b=float(link.get("bandwidth_hz", 1e3)),
            temp_t0=float(link.get("temp_k", 290.0)),
        )
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc


def parse_spec(config: dict) -> SweepSpec:
    """Build a SweepSpec from a (possibly partial) config dict."""
    sweep = config.get("sweep")
    if not isinstance(sweep, dict) or "axis" not in sweep:
        raise ConfigError("config needs a 'sweep' section with an 'axis' field")
    axis = sweep["axis"]
    if axis not in AXES:
        raise ConfigError(f"sweep.axis must be one of {AXES}, got {axis!r}")

    values = _expand_values(sweep.get("values", []))
    fixed = sweep.get("fixed", {}) or {}
    fixed_r = float(fixed["r_m"]) if fixed.get("r_m") is not None else None
    fixed_sigma = float(fixed["sigma_sm"]) if fixed.get("sigma_sm") is not None else None

    if axis == "conductivity":
        if sweep.get("media"):
            raise ConfigError("a conductivity sweep cannot also list media")
        media = [("swept", float("nan"))]
        if fixed_r is None:
            raise ConfigError("a conductivity sweep needs fixed.r_m")
    else:
        media = _parse_media(sweep.get("media", ["typical_soil"]))
        if fixed_sigma is not None:
            raise ConfigError("fixed.sigma_sm conflicts with the media list; use media")
        if axis == "range" and fixed_r is not None:
            raise ConfigError("the swept axis cannot also be fixed (fixed.r_m)")
        if axis == "pilots" and fixed_r is None:
            raise ConfigError("a pilot sweep needs fixed.r_m")

    link = _parse_link(config.get("link", {}) or {})

    mle_cfg = MleConfig()
    if config.get("mle"):
        m = config["mle"]
        try:
            mle_cfg = MleConfig(
                r_bounds=tuple(m.get("r_bounds", mle_cfg.r_bounds)),
                sigma_bounds=tuple(m.get("sigma_bounds", mle_cfg.sigma_bounds)),
                starts_per_axis=int(m.get("starts_per_axis", mle_cfg.starts_per_axis)),
                simplex_tol=float(m.get("simplex_tol", mle_cfg.simplex_tol)),
                max_iters=int(m.get("max_iters", mle_cfg.max_iters)),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    mc = None
    if config.get("mc"):
        mc = {
            "n_trials": int(config["mc"].get("n_trials", 1000)),
            "seed": int(config["mc"].get("seed", 0)),
        }
        if mc["n_trials"] < 1:
            raise ConfigError("mc.n_trials must be >= 1")

    return SweepSpec(
        axis=axis, values=values, link=link, fixed_r=fixed_r,
        fixed_sigma=fixed_sigma, media=media, mle=mle_cfg, mc=mc,
    )


def _point(spec: SweepSpec, value: float, sigma: float) -> tuple[Theta, LinkConfig]:
    """Resolve one (swept value, medium) pair into (Theta, LinkConfig)."""
    link = spec.link
    if spec.axis == "range":
        theta = Theta(r=value, sigma_m=sigma)
    elif spec.axis == "conductivity":
        theta = Theta(r=spec.fixed_r, sigma_m=value)
    else:  # pilots
        link = LinkConfig(
            coil=link.coil, f0=link.f0, z_ref=link.z_ref, p_tx=link.p_tx,
            pilots_l=int(round(value)), bandwidth_b=link.bandwidth_b,
            temp_t0=link.temp_t0,
        )
        theta = Theta(r=spec.fixed_r, sigma_m=sigma)
    return theta, link


def _base_row(spec: SweepSpec, value: float, label: str, sigma: float, chash: str) -> dict:
    theta, link = _point(spec, value, sigma)
    a = alpha(theta.sigma_m, link.f0)
    row = {
        "axis": spec.axis,
        "swept_value": value,
        "medium": label,
        "sigma_sm": theta.sigma_m,
        "r_m": theta.r,
        "f0_hz": link.f0,
        "pilots_l": link.pilots_l,
        "p_tx_w": link.p_tx,
        "z_ref_ohm": link.z_ref,
        "alpha_1pm": a,
        "alpha_r": a * theta.r,
        "kappa_r": kappa_r(theta, link.f0),
        "snr_db": snr_db(theta, link),
        "config_hash": chash,
    }
    try:
        rep = crb_report(theta, link)
        row.update({
            "rho": rep.rho,
            "penalty_linear": 10.0 ** (rep.penalty_r_db / 10.0),
            "penalty_db": rep.penalty_r_db,
            "crb_r_joint_m2": rep.crb_r_joint,
            "crb_r_single_m2": rep.crb_r_single,
            "crb_sigma_joint_sm2": rep.crb_sigma_joint,
            "crb_sigma_single_sm2": rep.crb_sigma_single,
            "singular": 0,
        })
    except SingularFimError:
        row.update({
            "rho": float("nan"), "penalty_linear": float("nan"),
            "penalty_db": float("nan"), "crb_r_joint_m2": float("nan"),
            "crb_r_single_m2": float("nan"), "crb_sigma_joint_sm2": float("nan"),
            "crb_sigma_single_sm2": float("nan"), "singular": 1,
        })
    return row


def _mc_fields(stats: TrialStats, mc: dict) -> dict:
    return {
        "mc_n_trials": stats.n_trials,
        "mc_seed": mc["seed"],
        "mc_mean_r_m": stats.mean_r,
        "mc_var_r_m2": stats.var_r,
        "mc_rmse_r_m": stats.rmse_r,
        "mc_mean_sigma_sm": stats.mean_sigma,
        "mc_var_sigma_sm2": stats.var_sigma,
        "mc_rmse_sigma_sm": stats.rmse_sigma,
        "mc_var_r_cond_m2": stats.var_r_conditional,
        "mc_empirical_penalty_db": stats.empirical_penalty_db,
        "mc_convergence_rate": stats.convergence_rate,
    }


def cmd_crb(spec: SweepSpec) -> tuple[list[dict], list[str]]:
    chash = spec.config_hash()
    rows = [
        _base_row(spec, v, label, sigma, chash)
        for v in spec.values
        for label, sigma in spec.media
    ]
    return rows, list(BASE_COLUMNS)


def cmd_penalty(spec: SweepSpec) -> tuple[list[dict], list[str]]:
    """Same base rows; appends Monte Carlo penalty columns when mc is configured."""
    rows, columns = cmd_crb(spec)
    if spec.mc:
        columns = columns + MC_COLUMNS
        for row in rows:
            theta, link = _point(spec, row["swept_value"], row["sigma_sm"])
            stats = run_batch(TrialSpec(
                theta_true=theta, cfg=link, mle_cfg=spec.mle,
                n_trials=spec.mc["n_trials"], seed=spec.mc["seed"],
            ))
            row.update(_mc_fields(stats, spec.mc))
    return rows, columns


def cmd_mle(spec: SweepSpec, progress=None) -> tuple[list[dict], list[str]]:
    """CRB columns plus Monte Carlo trial statistics at every sweep point."""
    if not spec.mc:
        raise ConfigError("the mle command needs an 'mc' section (n_trials, seed)")
    rows, _ = cmd_crb(spec)
    total = len(rows)
    for i, row in enumerate(rows):
        if progress:
            progress(f"[{i + 1}/{total}] {spec.axis}={row['swept_value']:g} "
                     f"medium={row['medium']} (n={spec.mc['n_trials']})")
        theta, link = _point(spec, row["swept_value"], row["sigma_sm"])
        stats = run_batch(TrialSpec(
            theta_true=theta, cfg=link, mle_cfg=spec.mle,
            n_trials=spec.mc["n_trials"], seed=spec.mc["seed"],
        ))
        row.update(_mc_fields(stats, spec.mc))
    return rows, BASE_COLUMNS + MC_COLUMNS


def _fmt(x) -> str:
    if isinstance(x, float):
        if math.isnan(x):
            return ""
        return format(x, ".12g")
    return str(x)


def write_rows(path: str, rows: list[dict], columns: list[str], spec: SweepSpec,
               command: str, fmt: str = "csv") -> None:
    """Serialize rows with a metadata preamble; staged write + atomic rename."""
    meta = {
        "schema": SCHEMA_VERSION,
        "command": command,
        "config": spec.resolved(),
        "config_hash": spec.config_hash(),
        "generated": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    out_dir = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=out_dir, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            if fmt == "json":
                json.dump({"metadata": meta, "columns": columns, "rows": rows}, fh, indent=1,
                          default=lambda x: None if isinstance(x, float) and math.isnan(x) else x)
                fh.write("\n")
            else:
                fh.write(f"# {SCHEMA_VERSION}\n")
                fh.write(f"# command: {command}\n")
                fh.write(f"# config: {json.dumps(spec.resolved(), sort_keys=True)}\n")
                fh.write(f"# config_hash: {meta['config_hash']}\n")
                fh.write(f"# generated: {meta['generated']}\n")
                fh.write(",".join(columns) + "\n")
                for row in rows:
                    fh.write(",".join(_fmt(row.get(c, "")) for c in columns) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_metadata(path: str) -> dict:
    """Parse the `#` preamble of a sweep CSV back into a metadata dict."""
    meta = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            body = line[1:].strip()
            if body == SCHEMA_VERSION:
                meta["schema"] = body
            elif ":" in body:
                key, _, val = body.partition(":")
                key = key.strip()
                val = val.strip()
                meta[key] = json.loads(val) if key == "config" else val
    return meta


def spec_from_metadata(path: str) -> SweepSpec:
    """Rebuild the SweepSpec that produced a CSV from its own metadata."""
    meta = read_metadata(path)
    if "config" not in meta:
        raise ConfigError(f"{path} carries no config metadata")
    cfg = meta["config"]
    # Media in resolved form are explicit (label, sigma) pairs
    spec = parse_spec({
        "link": cfg["link"],
        "sweep": {
            "axis": cfg["sweep"]["axis"],
            "values": cfg["sweep"]["values"],
            "media": None if cfg["sweep"]["axis"] == "conductivity"
                     else [sigma for _, sigma in cfg["sweep"]["media"]],
            "fixed": cfg["sweep"]["fixed"],
        },
        "mle": cfg["mle"],
        "mc": cfg["mc"],
    })
    # Restore preset labels lost in the numeric round-trip
    if cfg["sweep"]["axis"] != "conductivity":
        spec.media = [(label, float(sigma)) for label, sigma in cfg["sweep"]["media"]]
    return spec


# --- figures ---------------------------------------------------------------

FOUR_MEDIA = ["dry_soil", "typical_soil", "wet_soil", "seawater"]


def _figure_specs(which: str, scale: str, seed: int, trials: int | None) -> list[tuple[str, dict, str]]:
    """(filename, config dict, command) triples for one canonical figure."""
    desk = scale == "desk"
    n_mc = trials if trials is not None else (1000 if desk else 5000)
    crb_points = 12 if desk else 25
    pen_points = 20 if desk else 40

    out = []
    if which == "fig2":
        out.append(("fig2_crb_vs_range.csv", {
            "sweep": {"axis": "range",
                      "values": {"start": 1.0, "stop": 30.0, "count": crb_points},
                      "media": FOUR_MEDIA},
        }, "crb"))
        out.append(("fig2_mle_markers.csv", {
            "sweep": {"axis": "range", "values": [2.0, 5.0, 10.0, 15.0],
                      "media": ["typical_soil"]},
            "mc": {"n_trials": n_mc, "seed": seed},
        }, "mle"))
    elif which == "fig3":
        out.append(("fig3_penalty_vs_range.csv", {
            "sweep": {"axis": "range",
                      "values": {"start": 0.5, "stop": 50.0, "count": pen_points},
                      "media": FOUR_MEDIA},
        }, "penalty"))
        out.append(("fig3_mle_penalty_markers.csv", {
            "sweep": {"axis": "range", "values": [1.0, 2.0, 4.0, 8.0],
                      "media": ["typical_soil"]},
            "mc": {"n_trials": n_mc, "seed": seed},
        }, "mle"))
    elif which == "fig4":
        for r in (5.0, 10.0, 20.0):
            out.append((f"fig4_crb_vs_pilots_r{r:g}.csv", {
                "sweep": {"axis": "pilots",
                          "values": {"start": 10, "stop": 1000, "count": 10 if desk else 20},
                          "media": ["typical_soil"], "fixed": {"r_m": r}},
            }, "crb"))
        out.append(("fig4_mle_markers.csv", {
            "sweep": {"axis": "pilots", "values": [10, 100, 1000],
                      "media": ["typical_soil"], "fixed": {"r_m": 10.0}},
            "mc": {"n_trials": n_mc, "seed": seed},
        }, "mle"))
    else:
        raise ConfigError(f"unknown figure {which!r}")
    return out


def cmd_figures(which: str, scale: str, out_dir: str, seed: int = 20260824,
                trials: int | None = None, progress=None) -> list[str]:
    """Emit the canonical sweep CSVs for one figure (or all three)."""
    names = ["fig2", "fig3", "fig4"] if which == "all" else [which]
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for name in names:
        for fname, config, command in _figure_specs(name, scale, seed, trials):
            spec = parse_spec(config)
            if command == "crb":
                rows, cols = cmd_crb(spec)
            elif command == "penalty":
                rows, cols = cmd_penalty(spec)
            else:
                rows, cols = cmd_mle(spec, progress=progress)
            path = os.path.join(out_dir, fname)
            write_rows(path, rows, cols, spec, command)
            written.append(path)
            if progress:
                progress(f"wrote {path}")
    return written


# --- entry point -----------------------------------------------------------

def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} line {exc.lineno}: {exc.msg}") from exc


def _apply_overrides(config: dict, args) -> dict:
    if getattr(args, "media", None):
        config.setdefault("sweep", {})["media"] = [m.strip() for m in args.media.split(",")]
    if getattr(args, "seed", None) is not None:
        config.setdefault("mc", {})["seed"] = args.seed
    if getattr(args, "trials", None) is not None:
        config.setdefault("mc", {})["n_trials"] = args.trials
    return config


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="miisac",
                                description="MI channel CRB / penalty / MLE sweeps")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, mc=False):
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--out", required=True, help="output file path")
        sp.add_argument("--media", help="comma-separated preset names or S/m values")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--seed", type=int, help="Monte Carlo seed override")
        sp.add_argument("--trials", type=int, help="Monte Carlo trial count override")

    common(sub.add_parser("crb", help="CRB sweep"))
    common(sub.add_parser("penalty", help="penalty sweep"))
    common(sub.add_parser("mle", help="Monte Carlo MLE sweep"))

    fig = sub.add_parser("figures", help="canonical figure CSVs")
    fig.add_argument("which", choices=("fig2", "fig3", "fig4", "all"))
    fig.add_argument("--scale", choices=("desk", "full"), default="desk")
    fig.add_argument("--out", default="figures_out", help="output directory")
    fig.add_argument("--seed", type=int, default=20260824)
    fig.add_argument("--trials", type=int, help="override per-point trial count")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)

    def progress(msg: str) -> None:
        print(msg, file=sys.stderr, flush=True)

    try:
        if args.command == "figures":
            cmd_figures(args.which, args.scale, args.out, seed=args.seed,
                        trials=args.trials, progress=progress)
            return EXIT_OK

        config = _apply_overrides(_load_config(args.config), args)
        spec = parse_spec(config)
        if args.command == "crb":
            rows, cols = cmd_crb(spec)
        elif args.command == "penalty":
            rows, cols = cmd_penalty(spec)
        else:
            rows, cols = cmd_mle(spec, progress=progress)
        write_rows(args.out, rows, cols, spec, args.command, fmt=args.format)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if all(row.get("singular") for row in rows):
        print("numerical failure: FIM singular at every sweep point", file=sys.stderr)
        return EXIT_NUMERICAL
    if args.command == "mle":
        bad = [r for r in rows if r["mc_convergence_rate"] < CONVERGENCE_THRESHOLD]
        if bad:
            print(f"convergence-rate breach at {len(bad)} point(s) "
                  f"(threshold {CONVERGENCE_THRESHOLD})", file=sys.stderr)
            return EXIT_CONVERGENCE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""Render publication-style figures from miisac sweep CSVs.

Pure presentation layer: every plotted series comes straight from named
CSV columns, no physics is recomputed here. Output is deterministic
(fixed style, no timestamps embedded), so re-rendering the same CSV
produces byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

SCHEMA = "miisac-sweep v1"

KNOWN_COLUMNS = {
    "axis", "swept_value", "medium", "sigma_sm", "r_m", "f0_hz", "pilots_l",
    "p_tx_w", "z_ref_ohm", "alpha_1pm", "alpha_r", "kappa_r", "rho",
    "penalty_linear", "penalty_db", "crb_r_joint_m2", "crb_r_single_m2",
    "crb_sigma_joint_sm2", "crb_sigma_single_sm2", "snr_db", "singular",
    "config_hash", "mc_n_trials", "mc_seed", "mc_mean_r_m", "mc_var_r_m2",
    "mc_rmse_r_m", "mc_mean_sigma_sm", "mc_var_sigma_sm2", "mc_rmse_sigma_sm",
    "mc_var_r_cond_m2", "mc_empirical_penalty_db", "mc_convergence_rate",
}

REQUIRED = {
    "crb_vs_range": ["r_m", "medium", "crb_r_joint_m2", "crb_r_single_m2",
                     "crb_sigma_joint_sm2", "crb_sigma_single_sm2"],
    "penalty_vs_range": ["r_m", "medium", "penalty_db"],
    "crb_vs_pilots": ["pilots_l", "r_m", "crb_r_joint_m2", "crb_sigma_joint_sm2"],
}

MEDIA_COLORS = {
    "dry_soil": "tab:brown",
    "typical_soil": "tab:green",
    "wet_soil": "tab:blue",
    "seawater": "tab:cyan",
}

_STYLE = {
    "figure.dpi": 120,
    "savefig.dpi": 120,
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.8,
    "svg.hashsalt": "plotgen",
}


class SchemaError(ValueError):
    """CSV does not carry the expected sweep schema."""


@dataclass
class FigureSpec:
    input_csvs: list[str]
    figure_kind: str   # crb_vs_range | penalty_vs_range | crb_vs_pilots
    output_path: str
    logx: bool = True
    logy: bool = True
    reference_lines: list[float] = field(default_factory=list)

    def __post_init__(self):
        if self.figure_kind not in REQUIRED:
            raise ValueError(f"unknown figure kind {self.figure_kind!r}")


def read_sweep_csv(path: str):
    """Parse one sweep CSV into (metadata, columns, rows).

    Numeric fields become floats; empty cells become NaN. Raises
    SchemaError when the schema tag is missing or a required-for-any-plot
    column set cannot be satisfied later.
    """
    meta: dict = {}
    header: list[str] | None = None
    rows: list[dict] = []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                body = line[1:].strip()
                if body == SCHEMA:
                    meta["schema"] = body
                elif ":" in body:
                    key, _, val = body.partition(":")
                    key, val = key.strip(), val.strip()
                    meta[key] = json.loads(val) if key == "config" else val
                continue
            if header is None:
                header = line.split(",")
                continue
            cells = line.split(",")
            row = {}
            for col, cell in zip(header, cells):
                if cell == "":
                    row[col] = math.nan
                else:
                    try:
                        row[col] = float(cell)
                    except ValueError:
                        row[col] = cell
            rows.append(row)
    if meta.get("schema") != SCHEMA:
        raise SchemaError(f"{path}: missing or wrong schema tag (expected '{SCHEMA}')")
    if header is None:
        raise SchemaError(f"{path}: no header row")
    unknown = [c for c in header if c not in KNOWN_COLUMNS]
    if unknown:
        warnings.warn(f"{path}: ignoring unknown columns {unknown}")
    return meta, header, rows


def _require(columns, path, kind):
    missing = [c for c in REQUIRED[kind] if c not in columns]
    if missing:
        raise SchemaError(f"{path}: missing column '{missing[0]}' required for {kind}")


def _has_mc(row, col="mc_var_r_m2"):
    v = row.get(col, math.nan)
    return isinstance(v, float) and not math.isnan(v)


def _color(label, index):
    return MEDIA_COLORS.get(label, f"C{index}")


def _group_by_medium(rows):
    groups: dict[str, list[dict]] = {}
    for row in rows:
        groups.setdefault(str(row.get("medium", "")), []).append(row)
    return groups


def _load_all(spec: FigureSpec):
    loaded = []
    for path in spec.input_csvs:
        meta, columns, rows = read_sweep_csv(path)
        loaded.append((path, meta, columns, rows))
    return loaded


def _render_crb_vs_range(spec: FigureSpec):
    fig, (ax_r, ax_s) = plt.subplots(1, 2, figsize=(9, 3.6))
    any_markers = False
    for path, _, columns, rows in _load_all(spec):
        curve_rows = [r for r in rows if not _has_mc(r)]
        marker_rows = [r for r in rows if _has_mc(r)]
        if curve_rows:
            _require(columns, path, "crb_vs_range")
        for i, (label, grp) in enumerate(sorted(_group_by_medium(curve_rows).items())):
            grp.sort(key=lambda r: r["r_m"])
            x = [r["r_m"] for r in grp]
            c = _color(label, i)
            ax_r.plot(x, [math.sqrt(r["crb_r_joint_m2"]) for r in grp], c=c, label=label)
            ax_r.plot(x, [math.sqrt(r["crb_r_single_m2"]) for r in grp], c=c, alpha=0.35)
            ax_s.plot(x, [math.sqrt(r["crb_sigma_joint_sm2"]) for r in grp], c=c, label=label)
            ax_s.plot(x, [math.sqrt(r["crb_sigma_single_sm2"]) for r in grp], c=c, alpha=0.35)
        if marker_rows:
            any_markers = True
            x = [r["r_m"] for r in marker_rows]
            ax_r.plot(x, [math.sqrt(r["mc_var_r_m2"]) for r in marker_rows],
                      "kx", ls="none", label="MLE")
            ax_s.plot(x, [math.sqrt(r["mc_var_sigma_sm2"]) for r in marker_rows],
                      "kx", ls="none", label="MLE")
    if not any_markers:
        warnings.warn("no Monte Carlo columns found; rendering curves only")
    for ax, ylabel in ((ax_r, "range accuracy bound [m]"),
                       (ax_s, "conductivity accuracy bound [S/m]")):
        ax.set_xlabel("range r [m]")
        ax.set_ylabel(ylabel)
        if spec.logy:
            ax.set_yscale("log")
        if spec.logx:
            ax.set_xscale("log")
        ax.legend(fontsize=8)
    return fig


def _render_penalty_vs_range(spec: FigureSpec):
    fig, ax = plt.subplots(figsize=(5.2, 3.8))
    any_markers = False
    for path, _, columns, rows in _load_all(spec):
        curve_rows = [r for r in rows if not _has_mc(r, "mc_empirical_penalty_db")]
        marker_rows = [r for r in rows if _has_mc(r, "mc_empirical_penalty_db")]
        if curve_rows:
            _require(columns, path, "penalty_vs_range")
        for i, (label, grp) in enumerate(sorted(_group_by_medium(curve_rows).items())):
            grp.sort(key=lambda r: r["r_m"])
            ax.plot([r["r_m"] for r in grp], [r["penalty_db"] for r in grp],
                    c=_color(label, i), label=label)
        if marker_rows:
            any_markers = True
            ax.plot([r["r_m"] for r in marker_rows],
                    [r["mc_empirical_penalty_db"] for r in marker_rows],
                    "kx", ls="none", label="MLE empirical")
    if not any_markers:
        warnings.warn("no Monte Carlo columns found; rendering curves only")
    ax.axhline(10 * math.log10(2), color="k", lw=1, ls=":", label="3 dB near-field limit")
    ax.set_xlabel("range r [m]")
    ax.set_ylabel("joint estimation penalty [dB]")
    if spec.logx:
        ax.set_xscale("log")
    ax.legend(fontsize=8)
    return fig


def _render_crb_vs_pilots(spec: FigureSpec):
    fig, (ax_r, ax_s) = plt.subplots(1, 2, figsize=(9, 3.6))
    any_markers = False
    for idx, (path, _, columns, rows) in enumerate(_load_all(spec)):
        curve_rows = [r for r in rows if not _has_mc(r)]
        marker_rows = [r for r in rows if _has_mc(r)]
        if curve_rows:
            _require(columns, path, "crb_vs_pilots")
            curve_rows.sort(key=lambda r: r["pilots_l"])
            label = f"r = {curve_rows[0]['r_m']:g} m"
            x = [r["pilots_l"] for r in curve_rows]
            ax_r.plot(x, [math.sqrt(r["crb_r_joint_m2"]) for r in curve_rows],
                      c=f"C{idx}", label=label)
            ax_s.plot(x, [math.sqrt(r["crb_sigma_joint_sm2"]) for r in curve_rows],
                      c=f"C{idx}", label=label)
        if marker_rows:
            any_markers = True
            x = [r["pilots_l"] for r in marker_rows]
            ax_r.plot(x, [math.sqrt(r["mc_var_r_m2"]) for r in marker_rows],
                      "kx", ls="none", label="MLE")
            ax_s.plot(x, [math.sqrt(r["mc_var_sigma_sm2"]) for r in marker_rows],
                      "kx", ls="none", label="MLE")
    if not any_markers:
        warnings.warn("no Monte Carlo columns found; rendering curves only")
    thresholds = spec.reference_lines or [1e-2, 1e-3]   # cm and mm accuracy
    for t in thresholds:
        ax_r.axhline(t, color="k", lw=1, ls="--", alpha=0.6)
    for ax, ylabel in ((ax_r, "range accuracy bound [m]"),
                       (ax_s, "conductivity accuracy bound [S/m]")):
        ax.set_xlabel("pilot count L")
        ax.set_ylabel(ylabel)
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.legend(fontsize=8)
    return fig


_RENDERERS = {
    "crb_vs_range": _render_crb_vs_range,
    "penalty_vs_range": _render_penalty_vs_range,
    "crb_vs_pilots": _render_crb_vs_pilots,
}


def render(spec: FigureSpec) -> str:
    """Render one figure; returns the output path."""
    with plt.rc_context(_STYLE):
        fig = _RENDERERS[spec.figure_kind](spec)
        fig.tight_layout()
        # Strip embedded timestamps so identical inputs give identical bytes
        metadata = {}
        if spec.output_path.endswith(".svg"):
            metadata = {"Date": None}
        elif spec.output_path.endswith(".pdf"):
            metadata = {"CreationDate": None}
        fig.savefig(spec.output_path, metadata=metadata or None)
        plt.close(fig)
    return spec.output_path


def main(argv=None) -> int:
    p = argparse.ArgumentParser(prog="plotgen",
                                description="render figures from miisac sweep CSVs")
    p.add_argument("figure_kind", choices=sorted(_RENDERERS))
    p.add_argument("--in", dest="inputs", nargs="+", required=True, metavar="CSV")
    p.add_argument("--out", required=True, help="output image (svg/pdf/png)")
    p.add_argument("--linear-x", action="store_true", help="linear abscissa")
    args = p.parse_args(argv)
    try:
        render(FigureSpec(input_csvs=args.inputs, figure_kind=args.figure_kind,
                          output_path=args.out, logx=not args.linear_x))
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

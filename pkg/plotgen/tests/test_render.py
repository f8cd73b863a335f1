import warnings
from pathlib import Path

import pytest

from plotgen import FigureSpec, SchemaError, read_sweep_csv, render

DATA = Path(__file__).parent / "data"

FIG2 = [str(DATA / "fig2_crb_vs_range.csv"), str(DATA / "fig2_mle_markers.csv")]
FIG3 = [str(DATA / "fig3_penalty_vs_range.csv"), str(DATA / "fig3_mle_penalty_markers.csv")]
FIG4 = [str(DATA / f"fig4_crb_vs_pilots_r{r}.csv") for r in (5, 10, 20)] + [
    str(DATA / "fig4_mle_markers.csv")
]


def strip_mc_columns(src: str, dst: Path) -> str:
    """Golden CSV minus every mc_* column (simulates a plain crb run)."""
    lines = Path(src).read_text().splitlines()
    out = []
    keep = None
    for line in lines:
        if line.startswith("#"):
            out.append(line)
            continue
        cells = line.split(",")
        if keep is None:
            keep = [i for i, c in enumerate(cells) if not c.startswith("mc_")]
        out.append(",".join(cells[i] for i in keep))
    dst.write_text("\n".join(out) + "\n")
    return str(dst)


class TestReadSweepCsv:
    def test_parses_metadata_and_rows(self):
        meta, columns, rows = read_sweep_csv(FIG2[0])
        assert meta["schema"] == "miisac-sweep v1"
        assert "config" in meta and "link" in meta["config"]
        assert len(rows) == 12 * 4
        assert isinstance(rows[0]["crb_r_joint_m2"], float)

    def test_rejects_missing_schema(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("r_m,crb_r_joint_m2\n1,2\n")
        with pytest.raises(SchemaError):
            read_sweep_csv(str(bad))

    def test_warns_on_unknown_column(self, tmp_path):
        src = Path(FIG2[0]).read_text().replace("snr_db", "snr_db_v2")
        f = tmp_path / "u.csv"
        f.write_text(src)
        with pytest.warns(UserWarning, match="snr_db_v2"):
            read_sweep_csv(str(f))


class TestRender:
    @pytest.mark.parametrize("kind,inputs", [
        ("crb_vs_range", FIG2),
        ("penalty_vs_range", FIG3),
        ("crb_vs_pilots", FIG4),
    ])
    def test_renders_all_kinds(self, kind, inputs, tmp_path):
        out = tmp_path / f"{kind}.svg"
        render(FigureSpec(input_csvs=inputs, figure_kind=kind, output_path=str(out)))
        assert out.stat().st_size > 1000

    @pytest.mark.parametrize("kind,inputs", [
        ("crb_vs_range", FIG2),
        ("penalty_vs_range", FIG3),
        ("crb_vs_pilots", FIG4),
    ])
    def test_deterministic_output(self, kind, inputs, tmp_path):
        outs = []
        for name in ("a.svg", "b.svg"):
            out = tmp_path / name
            render(FigureSpec(input_csvs=inputs, figure_kind=kind, output_path=str(out)))
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_missing_mc_columns_degrades_to_curves(self, tmp_path):
        curves_only = strip_mc_columns(FIG3[0], tmp_path / "curves.csv")
        out = tmp_path / "fig.svg"
        with pytest.warns(UserWarning, match="curves only"):
            render(FigureSpec(input_csvs=[curves_only],
                              figure_kind="penalty_vs_range", output_path=str(out)))
        assert out.exists()

    def test_schema_mismatch_names_column(self, tmp_path):
        broken = Path(FIG3[0]).read_text().replace("penalty_db", "penalty_decibel")
        f = tmp_path / "broken.csv"
        f.write_text(broken)
        with pytest.raises(SchemaError, match="penalty_db"):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                render(FigureSpec(input_csvs=[str(f)],
                                  figure_kind="penalty_vs_range",
                                  output_path=str(tmp_path / "x.svg")))

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            FigureSpec(input_csvs=[], figure_kind="pie_chart", output_path="x.svg")


class TestCli:
    def test_main_end_to_end(self, tmp_path):
        from plotgen.render import main

        out = tmp_path / "fig3.svg"
        rc = main(["penalty_vs_range", "--in", *FIG3, "--out", str(out)])
        assert rc == 0 and out.exists()

    def test_main_schema_error_exit(self, tmp_path):
        from plotgen.render import main

        bad = tmp_path / "bad.csv"
        bad.write_text("r_m\n1\n")
        rc = main(["penalty_vs_range", "--in", str(bad), "--out", str(tmp_path / "x.svg")])
        assert rc == 1

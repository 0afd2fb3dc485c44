"""Report table rendering, including undefined metric cells."""

from doclink.evaluation import CwmeResult, DeltaCwmeRow, SubsetRow
from doclink.report import (
    format_report_text,
    render_figures,
    write_delta_cwme_tsv,
    write_report_tsv,
)


def rows_fixture():
    return [
        SubsetRow("recall@1_overall", "Recall@1 overall", "recall@1", 10, 100.0, 0.8, 0.05),
        SubsetRow("occ_5th_plus", "5th+ occurrence", "recall@1", 0, 0.0, None, None),
        SubsetRow("first", "First occurrence", "recall@1", 6, 60.0, 0.9, None),
    ]


def test_tsv_leaves_undefined_cells_empty(tmp_path):
    path = tmp_path / "r.tsv"
    write_report_tsv(rows_fixture(), path)
    lines = path.read_text().splitlines()
    assert lines[0] == "subset\tsupport_pct\tsupport_n\tmetric\thalf_width"
    assert lines[1] == "recall@1_overall\t100.00\t10\t80.0000\t5.0000"
    assert lines[2] == "occ_5th_plus\t0.00\t0\t\t"
    assert lines[3] == "first\t60.00\t6\t90.0000\t"


def test_text_report_marks_undefined_and_cwme():
    text = format_report_text(
        rows_fixture(),
        cwme_result=CwmeResult(echoed=1, exposed=2),
        delta_rows=[
            DeltaCwmeRow(
                "overall", CwmeResult(echoed=0, exposed=2), CwmeResult(echoed=2, exposed=2)
            ),
            DeltaCwmeRow("G", CwmeResult(0, 0), CwmeResult(1, 1)),
        ],
    )
    assert "undefined" in text
    assert "CWME: 50.0" in text
    assert "-100.0" in text
    assert "undef" in text  # group row with an undefined side


def test_delta_tsv_round_trips_values(tmp_path):
    path = tmp_path / "d.tsv"
    write_delta_cwme_tsv(
        [
            DeltaCwmeRow(
                "overall", CwmeResult(1, 4), CwmeResult(3, 4)
            )
        ],
        path,
    )
    body = path.read_text().splitlines()[1].split("\t")
    assert body == ["overall", "25.0000", "4", "75.0000", "4", "-50.0000"]


def test_render_figures_skips_empty_inputs(tmp_path):
    written = render_figures([], tmp_path)
    assert written == []
    written = render_figures(rows_fixture(), tmp_path)
    assert [p.name for p in written] == ["subset_recall.png", "recurrence_recall.png"]

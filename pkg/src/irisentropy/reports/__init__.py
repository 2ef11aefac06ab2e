from .bundle import (ReportBundle, dof_record, equity_record, ev_record, fmr_record, ks_record,
                     read_report, record, remap_record, write_report)
from .svg import FigureSpec, figure_table, render_figure, save_figure

__all__ = [
    "ReportBundle", "dof_record", "equity_record", "ev_record", "fmr_record", "ks_record",
    "read_report", "record", "remap_record", "write_report", "FigureSpec", "figure_table",
    "render_figure", "save_figure",
]

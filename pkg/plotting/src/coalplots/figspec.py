"""Declarative figure specifications.

A spec is a small INI file: one [figure] section for the grid and axis
choices, one [panel.K] section per panel listing its CSV series.

    [figure]
    rows = 1
    cols = 2
    yscale = logit        # or linear
    kingman = true        # overlay the pairwise-coalescent reference curve

    [panel.1]
    title = a
    series.1 = out/fig1a_limit.csv :: exact :: line
    series.2 = out/fig1a_ancestral.csv :: N=1000 :: circle

Series are "path :: label :: style" with style either line or circle.
"""

from __future__ import annotations

import configparser
import csv
import os
from dataclasses import dataclass, field

__all__ = ["FigureSpec", "PanelSpec", "SeriesSpec", "SpecError", "load_spec", "read_series_csv"]


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class SeriesSpec:
    path: str
    label: str
    style: str  # "line" | "circle"


@dataclass(frozen=True)
class PanelSpec:
    title: str
    series: tuple[SeriesSpec, ...]


@dataclass(frozen=True)
class FigureSpec:
    rows: int
    cols: int
    yscale: str  # "logit" | "linear"
    kingman: bool
    panels: tuple[PanelSpec, ...]


def _parse_series(raw: str, base_dir: str) -> SeriesSpec:
    parts = [p.strip() for p in raw.split("::")]
    if len(parts) != 3:
        raise SpecError(f"series must be 'path :: label :: style', got {raw!r}")
    path, label, style = parts
    if style not in ("line", "circle"):
        raise SpecError(f"unknown series style {style!r}")
    if not os.path.isabs(path):
        path = os.path.join(base_dir, path)
    return SeriesSpec(path=path, label=label, style=style)


def load_spec(path: str) -> FigureSpec:
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise SpecError(f"cannot read spec file {path!r}")
    if "figure" not in parser:
        raise SpecError("spec needs a [figure] section")
    fig = parser["figure"]
    rows = fig.getint("rows", 1)
    cols = fig.getint("cols", 1)
    yscale = fig.get("yscale", "logit").strip()
    if yscale not in ("logit", "linear"):
        raise SpecError(f"yscale must be logit or linear, got {yscale!r}")
    kingman = fig.getboolean("kingman", False)
    base_dir = os.path.dirname(os.path.abspath(path))

    panel_names = sorted(
        (s for s in parser.sections() if s.startswith("panel.")),
        key=lambda s: int(s.split(".", 1)[1]),
    )
    if not panel_names:
        raise SpecError("spec needs at least one [panel.K] section")
    if len(panel_names) > rows * cols:
        raise SpecError(f"{len(panel_names)} panels do not fit a {rows}x{cols} grid")
    panels = []
    for name in panel_names:
        section = parser[name]
        series_keys = sorted(
            (k for k in section if k.startswith("series.")),
            key=lambda k: int(k.split(".", 1)[1]),
        )
        if not series_keys:
            raise SpecError(f"[{name}] lists no series")
        series = tuple(_parse_series(section[k], base_dir) for k in series_keys)
        panels.append(PanelSpec(title=section.get("title", name), series=series))
    spec = FigureSpec(rows=rows, cols=cols, yscale=yscale, kingman=kingman, panels=tuple(panels))
    for panel in spec.panels:
        for s in panel.series:
            if not os.path.exists(s.path):
                raise SpecError(f"series CSV does not exist: {s.path}")
    return spec


def read_series_csv(path: str):
    """Read an (i, mean, ...) CSV emitted by the simulation CLI.

    Accepts the spectrum schema (i,mean,stderr,M), the comparison schema
    (i,mean,stderr,M,phi_i), and the exact schema (i,E_Li,phi_i), returning
    (i, y) with y the mean column (phi_i for the exact schema).
    """
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header[:2] == ["i", "mean"]:
                ycol = 1
            elif header == ["i", "E_Li", "phi_i"]:
                ycol = 2
            else:
                raise SpecError(f"{path}: unrecognized header {header!r}")
            xs, ys = [], []
            for row in reader:
                xs.append(int(row[0]))
                ys.append(float(row[ycol]))
    except (OSError, ValueError, IndexError, StopIteration) as exc:
        raise SpecError(f"ill-formed series CSV {path}: {exc}") from exc
    if not xs:
        raise SpecError(f"series CSV {path} has no data rows")
    return xs, ys

import math
import subprocess
import sys

import numpy as np
import pytest

from coalplots import SpecError, kingman_reference, load_spec, logit, render
from coalplots.cli import main


def _write_spectrum_csv(path, means, stderr=1e-3, M=100):
    lines = ["i,mean,stderr,M"]
    for i, m in enumerate(means, start=1):
        lines.append(f"{i},{float(m)!r},{float(stderr)!r},{M}")
    path.write_text("\n".join(lines) + "\n")


def _fig1a_like_dir(tmp_path):
    """Two panels' worth of CSVs shaped like the shipped fig1a outputs (n=16)."""
    n = 16
    ref = kingman_reference(n)
    bump = ref * np.linspace(1.25, 0.9, n - 1)
    bump /= bump.sum()
    _write_spectrum_csv(tmp_path / "fig1a_limit.csv", ref)
    _write_spectrum_csv(tmp_path / "fig1a_ancestral.csv", bump)
    spec = tmp_path / "fig.spec"
    spec.write_text(
        "[figure]\n"
        "rows = 1\ncols = 2\nyscale = logit\nkingman = true\n"
        "[panel.1]\ntitle = a\n"
        "series.1 = fig1a_limit.csv :: exact :: line\n"
        "series.2 = fig1a_ancestral.csv :: simulated :: circle\n"
        "[panel.2]\ntitle = b\n"
        "series.1 = fig1a_ancestral.csv :: simulated :: line\n"
    )
    return spec


def test_kingman_overlay_values():
    ref = kingman_reference(4)
    assert ref == pytest.approx([6 / 11, 3 / 11, 2 / 11], abs=1e-12)


def test_logit_transform():
    assert logit([0.5]) == pytest.approx([0.0], abs=1e-15)
    with pytest.raises(ValueError):
        logit([0.0])
    with pytest.raises(ValueError):
        logit([1.0])
    with pytest.raises(ValueError):
        logit([-0.2])
    with pytest.raises(ValueError):
        logit([float("nan")])


def test_render_deterministic_png_and_svg(tmp_path):
    spec_path = _fig1a_like_dir(tmp_path)
    spec = load_spec(str(spec_path))
    for suffix in ("png", "svg"):
        a = tmp_path / f"one.{suffix}"
        b = tmp_path / f"two.{suffix}"
        render(spec, str(a))
        render(spec, str(b))
        assert a.read_bytes() == b.read_bytes(), suffix
        assert a.stat().st_size > 1000


def test_cli_round_trip(tmp_path):
    spec_path = _fig1a_like_dir(tmp_path)
    out = tmp_path / "fig.png"
    assert main(["--spec", str(spec_path), "--out", str(out)]) == 0
    assert out.exists()
    assert main(["--spec", str(spec_path), "--out", str(tmp_path / "fig.bmp")]) == 2


def test_missing_or_malformed_csv_fail_descriptively(tmp_path):
    spec = tmp_path / "bad.spec"
    spec.write_text(
        "[figure]\nrows = 1\ncols = 1\n"
        "[panel.1]\nseries.1 = nothere.csv :: x :: line\n"
    )
    with pytest.raises(SpecError, match="does not exist"):
        load_spec(str(spec))

    bad_csv = tmp_path / "bad.csv"
    bad_csv.write_text("w,r,o,n,g\n1,2,3,4,5\n")
    spec2 = tmp_path / "bad2.spec"
    spec2.write_text(
        "[figure]\nrows = 1\ncols = 1\n"
        f"[panel.1]\nseries.1 = {bad_csv} :: x :: line\n"
    )
    loaded = load_spec(str(spec2))
    with pytest.raises(SpecError, match="unrecognized header"):
        render(loaded, str(tmp_path / "x.png"))


def test_logit_axis_rejects_out_of_domain_means(tmp_path):
    csv = tmp_path / "s.csv"
    _write_spectrum_csv(csv, [0.5, 0.6, 1.0])
    spec = tmp_path / "s.spec"
    spec.write_text(
        "[figure]\nrows = 1\ncols = 1\nyscale = logit\n"
        f"[panel.1]\nseries.1 = {csv} :: x :: line\n"
    )
    with pytest.raises(ValueError, match="strictly inside"):
        render(load_spec(str(spec)), str(tmp_path / "s.png"))


def test_spec_validation_errors(tmp_path):
    p = tmp_path / "x.spec"
    p.write_text("[figure]\nrows = 1\ncols = 1\n")
    with pytest.raises(SpecError, match="at least one"):
        load_spec(str(p))
    p.write_text(
        "[figure]\nrows = 1\ncols = 1\nyscale = bogus\n[panel.1]\nseries.1 = a :: b :: line\n"
    )
    with pytest.raises(SpecError, match="yscale"):
        load_spec(str(p))
    p.write_text(
        "[figure]\nrows = 1\ncols = 1\n[panel.1]\nseries.1 = a :: b\n"
    )
    with pytest.raises(SpecError, match="path :: label :: style"):
        load_spec(str(p))


def test_exact_schema_supported(tmp_path):
    csv = tmp_path / "exact.csv"
    rows = ["i,E_Li,phi_i"] + [
        f"{i},{2.0 / i!r},{float(v)!r}" for i, v in enumerate(kingman_reference(6), 1)
    ]
    csv.write_text("\n".join(rows) + "\n")
    spec = tmp_path / "e.spec"
    spec.write_text(
        "[figure]\nrows = 1\ncols = 1\nyscale = linear\n"
        f"[panel.1]\nseries.1 = {csv} :: exact :: line\n"
    )
    out = tmp_path / "e.svg"
    render(load_spec(str(spec)), str(out))
    assert out.exists()

import pytest

from ecm_invade import plots
from ecm_invade.errors import ConfigurationError
from ecm_invade.runio import write_sweep_summary

PNG_MAGIC = b"\x89PNG"


def test_render_run_figures(tiny_run, tmp_path):
    written = plots.render(tiny_run.run_dir, out_dir=tmp_path)
    names = {p.name for p in written}
    assert "profiles.png" in names
    assert "front_position.png" in names
    assert "diagnostics.png" in names
    for p in written:
        assert p.read_bytes()[:4] == PNG_MAGIC


def test_render_empty_dir_rejected(tmp_path):
    with pytest.raises(ConfigurationError):
        plots.render(tmp_path)


def test_sweep_figure(tmp_path):
    records = [
        {"lambda": 1.0, "m0": 0.5, "fitted_speed": 0.98},
        {"lambda": 100.0, "m0": 0.5, "fitted_speed": 1.48},
        {"lambda": 1e4, "m0": 0.5, "fitted_speed": 1.9},
    ]
    write_sweep_summary(records, tmp_path / "sweep_summary.json")
    out = plots.sweep_figure(tmp_path)
    assert out.name == "speed_vs_lambda.png"
    assert out.read_bytes()[:4] == PNG_MAGIC
    # render() on a sweep dir picks the sweep figure
    written = plots.render(tmp_path)
    assert {p.name for p in written} == {"speed_vs_lambda.png"}


def test_sweep_figure_needs_speeds(tmp_path):
    write_sweep_summary([{"lambda": 1.0, "error": "boom"}], tmp_path / "sweep_summary.json")
    with pytest.raises(ConfigurationError):
        plots.sweep_figure(tmp_path)

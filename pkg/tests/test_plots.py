import numpy as np
import pandas as pd
import pytest

from anyonlt.errors import InvalidInputError
from anyonlt.pipelines.plots import emit_plot


def _sweep():
    return pd.DataFrame({"gamma": [0.01, 0.1, 0.5, 1.0], "nu=1": [1.8, 1.4, 1.1, 1.0], "nu=2": [3.0, 2.4, 2.1, 2.0]})


def _field():
    t = np.linspace(0.0, 1.0, 5)
    yy, xx = np.meshgrid(t, t, indexing="ij")
    return pd.DataFrame({"x": xx.ravel(), "y": yy.ravel(), "value": (xx * yy).ravel()})


def test_line_plot_is_svg_and_deterministic():
    a = emit_plot(_sweep(), "line", title="g sweep", logx=True, references=[("plateau", 1.0)])
    b = emit_plot(_sweep(), "line", title="g sweep", logx=True, references=[("plateau", 1.0)])
    assert a.lstrip().startswith("<?xml")
    assert "<svg" in a
    assert "g sweep" in a
    assert a == b


def test_overlay_draws_the_squares():
    plain = emit_plot(_field(), "heatmap")
    overlay = emit_plot(_field(), "overlay", squares=[((0.5, 0.5), 0.2), ((0.2, 0.8), 0.1)])
    assert overlay != plain
    assert overlay.count("<path") > plain.count("<path")


def test_empty_and_malformed_frames():
    with pytest.raises(InvalidInputError):
        emit_plot(pd.DataFrame(), "line")
    with pytest.raises(InvalidInputError):
        emit_plot(_sweep(), "heatmap")
    with pytest.raises(InvalidInputError):
        emit_plot(_sweep(), "pie")

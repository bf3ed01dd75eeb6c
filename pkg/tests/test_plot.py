import numpy as np
import pytest

from sgpmic.cli import main
from sgpmic.errors import InputError
from sgpmic.plot import read_embedding, render_svg


def test_four_points():
    X = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    svg = render_svg(X, [0, 0, 1, 1], ["a", "b", "a", "b"])
    assert svg.startswith("<svg") or svg.startswith("<?xml")
    assert svg.count('class="marker') == 4


def test_deterministic():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(30, 2))
    c = rng.integers(0, 3, 30)
    assert render_svg(X, c, None, title="t") == render_svg(X, c, None, title="t")


def test_rejects_wrong_dimension():
    with pytest.raises(InputError):
        render_svg(np.zeros((3, 3)), [0, 0, 0])


def test_cli_plot_and_q3_exit_code(tmp_path):
    good = tmp_path / "e.csv"
    good.write_text("x1,x2,cluster,label\n0,0,0,a\n1,0,0,b\n0,1,1,c\n1,1,1,a\n")
    out = tmp_path / "p.svg"
    assert main(["plot", str(good), str(out)]) == 0
    text = out.read_text()
    assert text.count('class="marker') == 4
    assert read_embedding(good)[2] is not None
    bad = tmp_path / "q3.csv"
    bad.write_text("x1,x2,x3,cluster,label\n0,0,0,0,a\n")
    assert main(["plot", str(bad), str(tmp_path / "q.svg")]) == 2
    assert not (tmp_path / "q.svg").exists()


def test_label_shapes_distinct():
    X = np.arange(12.0).reshape(6, 2)
    svg = render_svg(X, [0] * 6, ["a", "a", "b", "b", "c", "c"])
    kinds = {tag for tag in ("<circle", "<rect", "<polygon") if tag in svg}
    assert len(kinds) == 3

import numpy as np

from adiqp.distribution import Distribution
from adiqp.plotting import plot_distributions, plot_gap_histogram, plot_residuals, plot_scaling, plot_stabilizer_test
from adiqp.verifier import GraphState, NoiseModel, stabilizer_test

PNG = b"\x89PNG\r\n\x1a\n"


def test_every_figure_writes_png(tmp_path):
    g = GraphState(2, ((0, 1),), (0, 1))
    paths = [
        plot_distributions({"p": Distribution({"0": 0.5, "1": 0.5}), "q": Distribution({"0": 1.0})}, tmp_path / "d.png"),
        plot_gap_histogram(np.array([8, -8, 0, 4]), 3, tmp_path / "g.png"),
        plot_scaling([100, 1000], [0.01, 0.1], tmp_path / "s.png"),
        plot_stabilizer_test(stabilizer_test(g, NoiseModel("depolarizing", 0.1), k=20, seed=0), tmp_path / "v.png"),
        plot_residuals({"WhiteH": 1e-16, "Bridge": 0.0}, tmp_path / "r.png"),
    ]
    for p in paths:
        assert p.read_bytes()[:8] == PNG


def test_png_is_reproducible(tmp_path):
    a = plot_gap_histogram(np.array([8, 0, 4]), 3, tmp_path / "a.png")
    b = plot_gap_histogram(np.array([8, 0, 4]), 3, tmp_path / "b.png")
    assert a.read_bytes() == b.read_bytes()

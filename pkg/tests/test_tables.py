import csv
import io
import json

import numpy as np
import pytest

from corrdesign.errors import ConfigError
from corrdesign.kernels import smoothed_log
from corrdesign.tables import (FIG_DELTAS, REFERENCE_TABLE1, REFERENCE_TABLE2, REFERENCE_TABLE3, TABLE3_LAMBDAS,
                               FigureData, TableResult, TableRow, figure1, figure3, figure4, figure5, run_figure_data)


class TestReferenceValues:
    def test_sizes(self):
        assert len(REFERENCE_TABLE1) == 10 and len(REFERENCE_TABLE2) == 5 and len(REFERENCE_TABLE3) == 48

    def test_spot_values(self):
        assert REFERENCE_TABLE1[(1, 0.5)] == 0.978
        assert REFERENCE_TABLE2[0.1] == 0.936
        assert REFERENCE_TABLE3[(3, "arcsine", 2.5)] == 0.954
        assert REFERENCE_TABLE3[(1, "uniform", 0.5)] == 0.913
        assert TABLE3_LAMBDAS == (0.5, 1.5, 2.5, 3.5, 4.5, 5.5)

    def test_all_efficiencies(self):
        for table in (REFERENCE_TABLE1, REFERENCE_TABLE2, REFERENCE_TABLE3):
            assert all(0.8 < v <= 1.0 for v in table.values())


class TestTableResult:
    def make(self):
        rows = [TableRow({"delta": 0.02}, 0.998, 0.995), TableRow({"delta": 0.04}, 0.978, 0.96)]
        return TableResult(2, rows, 0.01)

    def test_summary(self):
        res = self.make()
        assert res.n_within == 1 and not res.passed()
        assert res.max_abs_delta == pytest.approx(0.018)

    def test_csv(self):
        rows = list(csv.reader(io.StringIO(self.make().to_csv())))
        assert rows[0] == ["delta", "reference", "computed", "delta", "within_tol"]
        assert rows[1] == ["0.02", "0.998", "0.995000", "-0.003000", "True"]
        assert rows[2][-1] == "False"


class TestFigures:
    def test_figure1_sensitivities(self):
        fig = figure1(n=41)
        # the arcsine design attains the bound under the logarithmic kernel only
        assert fig.summary["max_d_minus_b_logarithmic"] <= 1e-10
        assert fig.summary["max_d_minus_b_exponential"] > 0.1
        assert fig.summary["max_d_minus_b_triangular"] > 0.1
        # the density charges every point, so d = b on the whole interval
        assert np.allclose(fig.columns["d_logarithmic"], fig.columns["b_logarithmic"], rtol=0, atol=1e-10)

    def test_figure3_panels(self):
        fig = figure3(n=41, grid_n=41)
        assert fig.summary["min_b_minus_phi_a"] >= -1e-12
        assert fig.summary["min_b_minus_phi_b"] == pytest.approx(-0.605, abs=2e-3)
        assert fig.summary["min_b_minus_phi_c"] >= -1e-3
        assert set(fig.columns) == {"x", "b_a", "phi_a", "b_b", "phi_b", "b_c", "phi_c"}

    def test_figure4_values(self):
        fig = figure4(n=200)
        t = fig.columns["t"]
        assert np.allclose(fig.columns["log"], -np.log(t * t))
        for d in FIG_DELTAS:
            assert np.allclose(fig.columns[f"smoothed_{d:g}"], smoothed_log(d, t))
        far = t > 0.5
        assert np.abs(fig.columns["smoothed_0.02"][far] - fig.columns["log"][far]).max() < 1e-3

    def test_figure5_close_to_arcsine(self):
        fig = figure5()
        gaps = [fig.summary[f"cdf_gap_{d:g}"] for d in FIG_DELTAS]
        assert gaps[0] < gaps[1] < gaps[2]
        assert np.allclose([fig.columns[f"weight_{d:g}"].sum() for d in FIG_DELTAS], 1.0)
        assert gaps[0] <= 0.03

    def test_csv_and_summary(self, tmp_path):
        fig = run_figure_data(4, tmp_path)
        rows = list(csv.reader(io.StringIO((tmp_path / "figure4.csv").read_text())))
        assert rows[0] == list(fig.columns) and len(rows) == len(fig.columns["t"]) + 1
        assert json.loads((tmp_path / "figure4_summary.json").read_text()) == {}

    def test_ragged_columns(self):
        text = FigureData(9, {"a": [1.0, 2.0], "b": [3.0]}).to_csv()
        assert text.splitlines() == ["a,b", "1.0,3.0", "2.0,"]

    def test_unknown_figure(self):
        with pytest.raises(ConfigError):
            run_figure_data(2)

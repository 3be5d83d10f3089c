from dataclasses import replace

import numpy as np
import pytest

from chirow.device.circulator import (
    bandwidth,
    circulator_metrics,
    circulator_report,
    count_windows,
    fidelity_curve,
    find_windows,
    tunneling_report,
)
from chirow.errors import DegenerateRoutingError
from chirow.io.config import validate_report
from chirow.model.params import TightBindingParams, derived_losses, physical_from_tight_binding
from chirow.transport.scattering import transmission_spectrum, transmission_table

from conftest import FSR

PRESET_GRID = 1.0 + np.linspace(-8e-4, 8e-4, 16001)


def _ideal_table():
    table = np.zeros((4, 4))
    for m, n in ((1, 2), (2, 3), (3, 4), (4, 1)):
        table[m - 1, n - 1] = 1.0
    return table


@pytest.fixture
def tunneling_params():
    tb = TightBindingParams(g=3e-4, J1=3e-4, J2=6e-4, n_cells=3)
    return physical_from_tight_binding(tb, FSR, kappa_in=0.25j)


class TestCirculatorMetrics:
    """保真度、存活概率与插入损耗。"""

    def test_ideal(self):
        assert circulator_metrics(_ideal_table()) == (1.0, 1.0, 0.0)

    def test_half_power(self):
        fidelity, survival, loss = circulator_metrics(0.5 * _ideal_table())
        assert fidelity == 1.0
        assert survival == 0.5
        assert loss == pytest.approx(10 * np.log10(2))

    def test_dead_port(self):
        table = _ideal_table()
        table[2] = 0.0
        with pytest.raises(DegenerateRoutingError):
            circulator_metrics(table)

    def test_shape(self):
        with pytest.raises(ValueError):
            circulator_metrics(np.eye(3))

    def test_two_direction_average(self, lossless_params):
        table = transmission_table(lossless_params, 1.0 + 4.6e-5)[0]
        fidelity, survival, _ = circulator_metrics(table)
        forward = table[0, 1] / (table[0, 1] + table[0, 3])
        backward = table[1, 2] / (table[1, 0] + table[1, 2])
        assert fidelity == pytest.approx((forward + backward) / 2, rel=1e-14)
        assert survival == pytest.approx(1.0, abs=1e-8)

    def test_curve_matches_pointwise(self, lossless_params):
        tables = transmission_table(lossless_params, 1.0 + np.linspace(-2e-4, 2e-4, 9))
        fidelity, survival, loss = fidelity_curve(tables)
        for i, table in enumerate(tables):
            assert (fidelity[i], survival[i], loss[i]) == pytest.approx(circulator_metrics(table))


class TestWindows:
    """非互易窗口。"""

    def test_lossless_windows(self, lossless_params):
        windows = find_windows(transmission_spectrum(lossless_params, PRESET_GRID))
        assert len(windows) == 8
        centers = np.array([w.center for w in windows])
        for expected in (4.55e-5, 13.56e-5, 22.29e-5, 30.45e-5):
            for sign in (1, -1):
                nearest = centers[np.argmin(np.abs(centers - sign * expected))]
                assert nearest == pytest.approx(sign * expected, rel=0.02)
        for w in windows:
            assert w.peak_t23 >= 0.95
            assert w.lower <= w.center <= w.upper

    def test_no_emitter_no_windows(self, lossless_params):
        spec = transmission_spectrum(replace(lossless_params, Gamma=0.0), PRESET_GRID)
        assert find_windows(spec) == []

    @pytest.mark.parametrize("n_cells, expected", [(5, 4), (20, 14)])
    def test_count_grows_with_length(self, lossless_params, n_cells, expected):
        assert count_windows(replace(lossless_params, n_cells=n_cells)) == expected


class TestTunneling:
    """短链在 ω=Ω 处的边缘态隧穿。"""

    def test_three_cells(self, tunneling_params):
        report = tunneling_report(tunneling_params)
        assert report.t23 == pytest.approx(0.93, abs=0.03)
        assert report.t14 <= 0.02
        assert report.fidelity == pytest.approx(0.96, abs=0.03)
        assert report.survival == pytest.approx(0.99, abs=0.02)

    def test_long_chain_suppresses_tunneling(self, tunneling_params):
        report = tunneling_report(replace(tunneling_params, n_cells=20))
        assert report.t23 <= 0.05


class TestLossyDevice:
    """含本征损耗的器件参数。"""

    def test_channels_near_inner_windows(self, lossy_params):
        report = circulator_report(lossy_params, PRESET_GRID)
        for sign in (1, -1):
            channel = min(report.channels, key=lambda c: abs(c.center - sign * 4.6e-5))
            assert abs(channel.center - sign * 4.6e-5) <= 1e-5
            assert channel.fidelity >= 0.97
            assert 0.96 <= channel.survival <= 1.0

    def test_bandwidth(self, lossy_params):
        result = bandwidth(lossy_params)
        assert 0.923e-5 <= result.width <= 1.538e-5
        assert result.width == max(c.width for c in result.channels)
        assert result.total_width == pytest.approx(sum(c.width for c in result.channels))
        assert result.total_width >= result.width
        widest = max(result.channels, key=lambda c: c.width)
        assert result.mean_insertion_loss_db == widest.mean_insertion_loss_db

    def test_insertion_loss_bounds(self, lossy_params):
        # T23 = α^{4N}(1 − T21)，保真度 ≥ 0.95 时插入损耗不超过约 0.353 dB
        attenuation = derived_losses(lossy_params).alpha ** (4 * lossy_params.n_cells)
        floor = -5 * np.log10(attenuation)
        assert floor == pytest.approx(0.112, abs=1e-3)
        report = circulator_report(lossy_params, PRESET_GRID)
        assert report.channels
        for channel in report.channels:
            assert floor - 1e-9 <= channel.insertion_loss_db <= 0.36
            assert floor - 1e-9 <= channel.mean_insertion_loss_db <= 0.36

    def test_emitter_dissipation_keeps_operating_point(self, lossy_params):
        report = circulator_report(replace(lossy_params, gamma_qe=2.81e-8), PRESET_GRID)
        assert report.fidelity >= 0.97
        assert 0.96 <= report.survival <= 1.0

    def test_total_bandwidth_grows_with_coupling(self, lossy_params):
        totals = [bandwidth(replace(lossy_params, Gamma=g ** 2 / (2 * FSR))).total_width
                  for g in (1e-4, 3e-4, 5e-4)]
        assert totals[0] < totals[1] < totals[2]


class TestReport:
    def test_json_report(self, lossless_params):
        report = circulator_report(lossless_params, PRESET_GRID)
        payload = report.to_dict()
        assert validate_report(payload) == []
        assert len(payload["windows"]) == len(report.windows)
        assert report.fidelity >= 0.95
        assert report.operating_point == pytest.approx(
            max(report.channels, key=lambda c: (c.fidelity, -abs(c.center))).center)

    def test_print_summary(self, lossless_params, capsys):
        circulator_report(lossless_params, PRESET_GRID).print_summary()
        assert "环行器性能报告" in capsys.readouterr().out

    def test_reuses_given_spectrum(self, lossless_params, monkeypatch):
        spec = transmission_spectrum(lossless_params, PRESET_GRID)
        expected = circulator_report(lossless_params, PRESET_GRID)

        def fail(*args, **kwargs):
            raise AssertionError("透射谱被重复计算")

        monkeypatch.setattr("chirow.device.circulator.transmission_spectrum", fail)
        report = circulator_report(lossless_params, PRESET_GRID, spectrum=spec)
        assert report.to_dict() == expected.to_dict()

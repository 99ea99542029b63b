import numpy as np
import pytest

from nomaharq.allocation import Scheme
from nomaharq.errormodel import CodeParams
from nomaharq.expectation import ExpectationMethod, expected_power_slot2, expected_rate_slot2
from nomaharq.fading import LinkConfig
from nomaharq.sweeps import (
    DEFAULT_AXES,
    Experiment,
    Method,
    SweepSpec,
    apply_axis,
    default_base,
    emit_csv,
    render_csv,
    run_sweep,
)

FAST = (Method.CLOSED_FORM, Method.QUADRATURE, Method.LINEARIZED_Q)


def parse(text):
    meta = dict(line[len("# meta: "):].split("=", 1) for line in text.splitlines() if line.startswith("# meta: "))
    rows = [line.split(",") for line in text.splitlines() if not line.startswith("#")]
    return meta, rows[0], rows[1:]


class TestSpec:
    def test_empty_grid(self):
        with pytest.raises(ValueError):
            SweepSpec.default(Experiment.FIG2, grid=())

    @pytest.mark.parametrize("grid", [(1.0, 1.0), (1.0, 3.0, 2.0)])
    def test_non_monotone_grid(self, grid):
        with pytest.raises(ValueError):
            SweepSpec.default(Experiment.FIG2, grid=grid)

    def test_decreasing_grid_allowed(self):
        assert SweepSpec.default(Experiment.FIG2, grid=(30.0, 20.0)).grid == (30.0, 20.0)

    def test_fig6_needs_info_nats(self):
        with pytest.raises(ValueError):
            SweepSpec.default(Experiment.FIG6, base=LinkConfig())
        spec = SweepSpec.default(Experiment.FIG6)
        assert spec.base.code1.info_nats == 100.0

    def test_fig6_rate_follows_blocklength(self):
        config = apply_axis(default_base(Experiment.FIG6), "l", 500)
        assert config.code1.rate == pytest.approx(0.2)
        with pytest.raises(ValueError):
            apply_axis(config, "l", 500.5)

    def test_default_axes_cover_all_figures(self):
        assert set(DEFAULT_AXES) == set(Experiment)


class TestRunSweep:
    def test_single_point_equals_direct_call(self):
        spec = SweepSpec.default(Experiment.FIG2, grid=(30.0,), methods=(Method.CLOSED_FORM,))
        row = run_sweep(spec).rows[0]
        assert row.cells["proposed_closed_form"].value == expected_rate_slot2(LinkConfig()).value

    def test_power_point_equals_direct_call(self):
        spec = SweepSpec.default(Experiment.FIG4, grid=(1.0,), methods=(Method.CLOSED_FORM,))
        row = run_sweep(spec).rows[0]
        config = default_base(Experiment.FIG4)
        for scheme in Scheme:
            direct = expected_power_slot2(config, 1.0, scheme, ExpectationMethod.CLOSED_FORM).value_db
            assert row.cells[f"{scheme.value}_closed_form"].value == direct

    def test_fig2_shapes(self):
        result = run_sweep(SweepSpec.default(Experiment.FIG2, methods=(Method.CLOSED_FORM,)))
        std = [r.cells["standard_closed_form"].value for r in result.rows]
        prop = [r.cells["proposed_closed_form"].value for r in result.rows]
        assert np.all(np.diff(prop) > 0.0)
        assert std[-1] - std[-3] < 0.1

    def test_failing_point_is_recorded(self):
        base = LinkConfig().replace(code1=CodeParams(1000, 1.0))
        spec = SweepSpec(Experiment.FIG5, base, "l", (50, 1000), methods=(Method.CLOSED_FORM,))
        rows = run_sweep(spec).rows
        assert "blocklength" in rows[0].error and not rows[0].cells
        assert rows[1].error == "" and len(rows[1].cells) == 2

    def test_monte_carlo_cells_carry_se(self):
        spec = SweepSpec.default(Experiment.FIG3A, grid=(1000,), methods=(Method.MONTE_CARLO,), trials=20_000)
        for cell in run_sweep(spec).rows[0].cells.values():
            assert cell.se > 0.0


class TestCsv:
    def test_layout(self):
        spec = SweepSpec.default(Experiment.FIG3B, methods=FAST)
        meta, header, rows = parse(render_csv(run_sweep(spec)))
        cols = spec.value_columns()
        assert header == ["theta1"] + cols + [c + "_se" for c in cols] + [c + "_infeasible" for c in cols] + ["error"]
        assert len(rows) == len(spec.grid)
        assert {"seed", "config_hash", "version", "experiment"} <= set(meta)
        value = rows[0][1]
        assert float(value) == run_sweep(spec).rows[0].cells[cols[0]].value
        assert len(value.replace("-", "").replace(".", "").split("e")[0].lstrip("0")) <= 17

    def test_empty_method_set(self):
        text = render_csv(run_sweep(SweepSpec.default(Experiment.FIG2, methods=())))
        meta, header, rows = parse(text)
        assert header == ["p_db", "error"]
        assert all(r[1:] == [""] for r in rows)
        assert meta["methods"] == ""

    def test_byte_identical_files(self, tmp_path):
        spec = SweepSpec.default(Experiment.FIG5, grid=(200, 1000), trials=5000)
        emit_csv(run_sweep(spec), tmp_path / "a.csv")
        emit_csv(run_sweep(spec), tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_hash_changes_with_config(self):
        a = run_sweep(SweepSpec.default(Experiment.FIG2, grid=(30.0,), methods=()))
        b = run_sweep(SweepSpec.default(Experiment.FIG2, grid=(30.0,), methods=(), seed=1))
        assert a.metadata["config_hash"] != b.metadata["config_hash"]

    def test_io_error_names_path(self, tmp_path):
        result = run_sweep(SweepSpec.default(Experiment.FIG2, grid=(30.0,), methods=()))
        target = tmp_path / "missing" / "out.csv"
        with pytest.raises(OSError, match="missing"):
            emit_csv(result, target)

import json

import numpy as np
import pytest

from gehole import sweep
from gehole.cli import main
from gehole.config import parse_config, with_overrides

SMALL = """
basis.Nx = 8
basis.Ny = 6
basis.Nz = 4
convergence.ladder = 6x6x4; 8x6x4
heatmap.n_omega1 = 12
heatmap.n_omega2 = 14
r0.n_omega2 = 60
residual.n_omega2 = 60
cancel.n_omega2 = 60
"""


@pytest.fixture(scope="module")
def spec():
    return parse_config(SMALL)


@pytest.fixture(scope="module")
def heatmap(spec):
    return sweep.run_heatmap(spec)


@pytest.fixture
def cfg_file(tmp_path):
    path = tmp_path / "small.cfg"
    path.write_text(SMALL)
    return path


class TestHeatmap:
    def test_shape_and_mask(self, heatmap, spec):
        grid, (table, contour) = heatmap
        assert grid.values.shape == (spec.heatmap.n_omega1, spec.heatmap.n_omega2)
        assert np.all(np.isnan(grid.values[grid.masked]))
        assert np.all(np.isfinite(grid.values[~grid.masked]))
        assert len(table.rows) == grid.values.size
        assert all(r[2] is None for r in table.rows if r[3])

    @staticmethod
    def _check_bracketing(contours, x, y, v, m):
        for c in contours:
            for a, b in c:
                i = min(np.searchsorted(x, a, side="right") - 1, len(x) - 2)
                j = min(np.searchsorted(y, b, side="right") - 1, len(y) - 2)
                corners = [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)]
                vals = [v[k] for k in corners if not m[k]]
                assert min(vals) <= 0 <= max(vals)

    def test_contours_bracket_sign_changes(self, heatmap):
        grid, _ = heatmap
        v, m = grid.values, grid.masked
        # marching squares only traces squares whose four corners are unmasked
        corners = np.stack([v[:-1, :-1], v[1:, :-1], v[:-1, 1:], v[1:, 1:]])
        full = ~(m[:-1, :-1] | m[1:, :-1] | m[:-1, 1:] | m[1:, 1:])
        filled = np.where(np.isnan(corners), 0.0, corners)
        straddle = full & (filled.min(axis=0) < 0) & (filled.max(axis=0) > 0)
        assert bool(grid.contours) == bool(straddle.any())
        self._check_bracketing(grid.contours, grid.omega1, grid.omega2, v, m)

    def test_zero_contour_synthetic(self):
        x = np.linspace(0, 1, 21)
        y = np.linspace(0, 2, 31)
        v = x[:, None] - 0.25 * y[None, :] - 0.1
        m = np.zeros(v.shape, bool)
        m[:, 14:17] = True
        contours = sweep.zero_contours(v, m, x, y)
        assert len(contours) == 2
        for c in contours:
            assert c[:, 0] - 0.25 * c[:, 1] - 0.1 == pytest.approx(0.0, abs=1e-12)
        self._check_bracketing(contours, x, y, v, m)

    def test_rejects_ragged(self):
        with pytest.raises(ValueError):
            sweep.HeatmapGrid(np.arange(2.0), np.arange(3.0), np.zeros((3, 2)), np.zeros((3, 2), bool),
                              np.zeros(2, bool), ())

    def test_parallel_matches_serial(self, spec, heatmap):
        grid, _ = heatmap
        par, _ = sweep.run_heatmap(with_overrides(spec, workers=2))
        assert np.array_equal(par.masked, grid.masked)
        assert np.array_equal(par.values[~par.masked], grid.values[~grid.masked])


class TestR0:
    def test_masked_rows_empty(self, spec):
        table = sweep.run_r0_sweep(spec)
        assert len(table.rows) == len(spec.r0.E_gates) * spec.r0.n_omega2
        for row in table.rows:
            assert (row[3] is None) == row[4]
        assert len(table.metadata["curves"]) == 2

    def test_sign_change_refinement(self):
        from gehole.spectrum import QubitSubspace

        qs = QubitSubspace(np.array([0.0, 0.01, 0.2]), np.array([[0, 1e-3, 3e-3], [1e-3, 0, 0]], dtype=complex))
        w = np.linspace(1.2, 15, 300) * qs.omega0
        R0 = np.array([sweep.ratio_R0(qs, qs.omega0, x) for x in w])
        roots = sweep.r0_sign_changes(qs, w, R0, np.zeros(len(w), bool))
        assert roots
        for r in roots:
            assert abs(sweep.ratio_R0(qs, qs.omega0, r)) < 1e-6


class TestResidual:
    def test_without_defect(self, spec):
        plain = parse_config(SMALL + "defect.enabled = false\n")
        best, table = sweep.run_residual_sweep(plain)
        assert best.delta_omega_c == 0.0
        assert table.metadata["quadrature_order"] is None
        assert best.delta_omega_res == best.delta_omega2


class TestOutputs:
    def test_byte_identical_rerun(self, spec, tmp_path):
        table = sweep.run_r0_sweep(spec)
        a = sweep.emit_outputs([table], tmp_path / "a", spec, 1.0)
        b = sweep.emit_outputs([sweep.run_r0_sweep(spec)], tmp_path / "b", spec, 2.0)
        with open(a[0], "rb") as fa, open(b[0], "rb") as fb:
            assert fa.read() == fb.read()
        with open(a[1]) as fh:
            meta = json.load(fh)
        with open(a[0]) as fh:
            first = fh.readline()
        assert first == f"# run_spec_hash: {meta['run_spec_hash']}\n"
        assert meta["run_spec_hash"] == spec.hash
        assert meta["columns"][0] == "E_gate_MV_per_m"

    def test_cell_format(self):
        assert sweep._cell(None) == ""
        assert sweep._cell(True) == "1"
        assert sweep._cell(np.int64(3)) == "3"
        assert float(sweep._cell(0.1)) == 0.1


class TestCli:
    def test_spectrum(self, cfg_file, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["--config", str(cfg_file), "--out", str(out), "spectrum"]) == 0
        assert (out / "spectrum.csv").exists()
        meta = json.loads((out / "spectrum.meta.json").read_text())
        assert meta["convergence"]["ladder"][-1]["Nx"] == 8

    def test_config_error_exit(self, tmp_path, capsys):
        bad = tmp_path / "bad.cfg"
        bad.write_text("geometry.L = -1\n")
        assert main(["--config", str(bad), "spectrum"]) == 2
        assert "L must be positive" in capsys.readouterr().err
        assert main(["--config", str(tmp_path / "missing.cfg"), "spectrum"]) == 2

    def test_no_cancellation_exit(self, cfg_file, tmp_path, capsys):
        assert main(["--config", str(cfg_file), "--out", str(tmp_path), "--no-stamp", "cancel-solve"]) == 3
        assert "R0" in capsys.readouterr().err

    def test_oracle_report(self, cfg_file, tmp_path):
        assert main(["--config", str(cfg_file), "--out", str(tmp_path), "--no-stamp", "oracle-check"]) == 0
        result = json.loads((tmp_path / "oracle_check.meta.json").read_text())["result"]
        for key in ("shift_exact", "shift_perturbative", "ratio", "scaling_exponent", "fidelity_anchor"):
            assert key in result

    def test_requires_subcommand(self):
        with pytest.raises(SystemExit):
            main([])

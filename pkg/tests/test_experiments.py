import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import trapezoid

from klgof.exceptions import DegenerateRegression
from klgof.experiments import (
    KDE_GRID,
    ExperimentSpec,
    SpecError,
    gaussian_kde,
    loglog_slope,
    preset_spec,
    qq_pairs,
    run_convergence,
    run_critical_values,
    run_experiment,
    run_power,
    run_slopes,
    run_standardized_diagnostics,
    standardize,
)

LAPLACE_GAP = 0.5 * math.log(math.pi * math.e) - 1.0


class TestSpec:
    @pytest.mark.parametrize(
        "tree, key",
        [
            ({"kind": "convergence", "grid": {"k": [0]}}, "k"),
            ({"kind": "convergence", "grid": {"N": [1]}}, "N"),
            ({"kind": "convergence", "grid": {"m": [3], "N": [3]}}, "N"),
            ({"kind": "convergence", "replications": 1}, "replications"),
            ({"kind": "convergence", "alpha": 1.0}, "alpha"),
            ({"kind": "convergence", "seed": -1}, "seed"),
            ({"kind": "convergence", "backend": "ball"}, "backend"),
            ({"kind": "convergence", "bogus": 1}, "bogus"),
            ({"kind": "convergence", "grid": {"q": [1]}}, "grid.q"),
            ({"kind": "power", "grid": {"nu": [2]}}, "nu"),
            ({"kind": "slopes", "grid": {"N": [100, 200, 400]}}, "N"),
            ({"kind": "banana"}, "kind"),
            ({"grid": {}}, "kind"),
        ],
    )
    def test_errors_name_the_key(self, tree, key):
        with pytest.raises(SpecError) as info:
            ExperimentSpec.from_dict(tree)
        assert info.value.key == key
        assert key in str(info.value)

    def test_k_message(self):
        with pytest.raises(SpecError, match="k must be ≥ 1"):
            ExperimentSpec.from_dict({"kind": "convergence", "grid": {"k": [0]}})

    def test_round_trip(self):
        spec = preset_spec("power")
        again = ExperimentSpec.from_dict(json.loads(json.dumps(spec.to_dict())))
        assert again == spec
        assert again.spec_hash == spec.spec_hash
        assert spec.replace(seed=1).spec_hash != spec.spec_hash

    @pytest.mark.parametrize("kind", ["convergence", "power", "critical_values", "slopes", "diagnostics"])
    @pytest.mark.parametrize("full", [False, True])
    def test_presets(self, kind, full):
        spec = preset_spec(kind, full_scale=full)
        assert spec.kind == kind
        if not full:
            assert max(spec.n) <= 2000
            assert spec.replications <= 300

    def test_kind_mismatch(self):
        with pytest.raises(SpecError):
            run_power(preset_spec("convergence"))


class TestSlope:
    def test_inverse_sqrt(self):
        n = [250, 500, 1000, 2000, 4000]
        slope, intercept = loglog_slope(n, [3.0 / math.sqrt(v) for v in n])
        assert slope == pytest.approx(-0.5, abs=1e-9)
        assert intercept == pytest.approx(math.log(3.0), abs=1e-9)

    def test_constant(self):
        slope, _ = loglog_slope([100, 200, 300, 400], [0.07] * 4)
        assert slope == pytest.approx(0.0, abs=1e-9)

    def test_sign_ignored(self):
        n = [100, 200, 400, 800]
        a = loglog_slope(n, [-(v ** -1.0) for v in n])
        assert a[0] == pytest.approx(-1.0, abs=1e-9)

    def test_degenerate(self):
        with pytest.raises(DegenerateRegression):
            loglog_slope([100, 200, 300, 400], [0.1, 0.0, 0.2, 0.1])

    @settings(max_examples=50, deadline=None)
    @given(st.floats(-2.0, 2.0), st.floats(0.01, 100.0))
    def test_exact_power_law(self, beta, c):
        n = np.array([100.0, 300.0, 1000.0, 3000.0])
        slope, _ = loglog_slope(n, c * n ** beta)
        assert slope == pytest.approx(beta, abs=1e-9)

    def test_censored_cell(self, monkeypatch):
        import klgof.experiments as ex

        def zeros(spec, alt, n, k, tag, count, workers):
            return np.zeros(count), 0

        monkeypatch.setattr(ex, "_statistics", zeros)
        report = run_slopes(preset_spec("slopes", m=(1,), s=(2.0,), replications=2))
        assert report.cells[0]["extra"]["censored"] is True
        assert report.cells[0]["extra"]["slope"] is None
        assert report.tables["table"][1][-1] is True


class TestDiagnosticsHelpers:
    def test_standardize(self):
        z = standardize(np.random.default_rng(1).gamma(2.0, size=500) * 7 + 3)
        assert z.mean() == pytest.approx(0.0, abs=1e-10)
        assert z.std(ddof=1) == pytest.approx(1.0, abs=1e-10)

    def test_kde_integrates_to_one(self):
        z = np.random.default_rng(2).standard_normal(1000)
        density, bw = gaussian_kde(z)
        assert bw == pytest.approx(1.06 * z.std(ddof=1) * 1000 ** -0.2)
        assert trapezoid(density, KDE_GRID) == pytest.approx(1.0, abs=0.01)

    def test_kde_matches_scipy(self):
        from scipy.stats import gaussian_kde as scipy_kde

        z = np.random.default_rng(3).standard_normal(300)
        density, bw = gaussian_kde(z)
        ref = scipy_kde(z, bw_method=bw / z.std(ddof=1))(KDE_GRID)
        np.testing.assert_allclose(density, ref, rtol=1e-10)

    def test_qq_sorted(self):
        theo, emp = qq_pairs(np.random.default_rng(4).standard_normal(200))
        assert np.all(np.diff(theo) > 0)
        assert np.all(np.diff(emp) >= 0)
        assert theo[0] == pytest.approx(-theo[-1])


class TestRunners:
    def test_convergence_shape(self):
        spec = ExperimentSpec(kind="convergence", s=(2.0,), m=(1,), n=(500, 1000, 2000), replications=50)
        report = run_convergence(spec)
        files = report.file_contents()
        assert set(files) == {"convergence_report.json", "convergence_s2_m1_k1.csv"}
        lines = files["convergence_s2_m1_k1.csv"].strip().split("\n")
        assert lines[0] == "N,mean,std,count"
        assert len(lines) == 4
        for cell in report.cells:
            assert set(cell["provenance"]) >= {"seed", "stream_base", "replications"}

    @pytest.mark.slow
    def test_convergence_limits(self):
        spec = ExperimentSpec(kind="convergence", s=(1.0, 2.0), m=(1,), n=(5000,), replications=100)
        means = {c["cell"]["s"]: c["mean"] for c in run_convergence(spec).cells}
        assert abs(means[2.0]) <= 0.02
        assert means[1.0] == pytest.approx(LAPLACE_GAP, abs=0.03)

    def test_variability_decreases_with_k(self):
        spec = ExperimentSpec(kind="convergence", s=(2.0,), m=(2,), n=(500,), k=(1, 3), replications=200)
        std = {c["cell"]["k"]: c["std"] for c in run_convergence(spec).cells}
        assert std[3] < std[1]

    def test_diagnostics_outputs(self):
        spec = ExperimentSpec(kind="diagnostics", m=(2,), n=(300,), k=(1,), replications=100)
        report = run_standardized_diagnostics(spec)
        z = np.asarray(report.cells[0]["extra"]["z"])
        assert z.mean() == pytest.approx(0.0, abs=1e-10)
        assert z.std(ddof=1) == pytest.approx(1.0, abs=1e-10)
        kde = report.tables["m2_N300_k1_kde"]
        assert len(kde) == 257
        qq = np.array(report.tables["m2_N300_k1_qq"][1:])
        assert np.all(np.diff(qq, axis=0) >= 0)

    def test_critical_value_table_layout(self):
        spec = ExperimentSpec(kind="critical_values", s=(2.0,), n=(100, 400), m=(2,), k=(1, 2),
                              replications=200)
        table = run_critical_values(spec).tables["s2"]
        assert table[0] == ["N", "m2_k1", "m2_k2"]
        assert [row[0] for row in table[1:]] == [100, 400]
        for col in (1, 2):
            assert table[2][col] < table[1][col]

    def test_power_under_null(self):
        spec = ExperimentSpec(kind="power", m=(2,), n=(500,), s=(2.0,), replications=300, bootstrap_b=1000)
        power = run_power(spec).cells[0]["extra"]["power"]
        # binomial 99% band around 0.05 for 300 replications
        assert 0.02 <= power <= 0.10

    @pytest.mark.slow
    def test_power_grows_with_n(self):
        spec = ExperimentSpec(kind="power", m=(2,), n=(500, 1000), s=(1.0, 4.0), nu=(3.0, 10.0),
                              replications=200)
        report = run_power(spec)
        power = {}
        for c in report.cells:
            power[(c["cell"]["family"], c["cell"]["parameter"], c["cell"]["N"])] = c["extra"]["power"]
        for fam, par, n in power:
            if n == 500:
                assert power[(fam, par, 1000)] >= power[(fam, par, 500)] - 0.03
        assert power[("student_t", 3.0, 1000)] >= 0.9

    def test_per_dataset_mode(self):
        spec = ExperimentSpec(kind="power", m=(1,), n=(100,), s=(1.0,), replications=4, bootstrap_b=100,
                              per_dataset_bootstrap=True)
        report = run_power(spec)
        assert report.cells[0]["extra"]["calibration"] == "per_dataset"
        assert report.to_json() == run_power(spec).to_json()

    def test_worker_count_invariance(self, tmp_path):
        spec = ExperimentSpec(kind="convergence", s=(1.0, 2.0), m=(1, 2), n=(200,), replications=20)
        a = run_experiment(spec, workers=1).file_contents()
        b = run_experiment(spec, workers=2).file_contents()
        assert a == b

    def test_write_is_atomic_and_complete(self, tmp_path):
        spec = ExperimentSpec(kind="slopes", m=(1,), s=(2.0,), n=(100, 200, 300, 400), replications=10)
        report = run_slopes(spec)
        paths = report.write(tmp_path)
        names = sorted(p.name for p in tmp_path.iterdir())
        assert names == sorted(report.file_contents())
        assert len(paths) == len(names)
        data = json.loads((tmp_path / "slopes_report.json").read_text())
        assert data["schema_version"] == 1
        assert data["metadata"]["seed"] == spec.seed
        assert data["metadata"]["conventions"]["regression"].startswith("OLS")

    def test_progress_callback(self):
        seen = []
        spec = ExperimentSpec(kind="convergence", s=(2.0,), m=(1,), n=(100, 200), replications=5)
        run_convergence(spec, progress=lambda done, total, cell: seen.append((done, total)))
        assert seen == [(1, 2), (2, 2)]

"""CSV ingestion, return transforms, prepared-data files, and reports."""
from __future__ import annotations

import math

import numpy as np
import pytest

from garchx import (
    DataError,
    Dataset,
    FitOptions,
    ModelSpec,
    ParamVector,
    ShockDist,
    emit_report,
    fit_qmle,
    fit_summary,
    ingest_csv,
    log_returns_x100,
    read_prepared_csv,
    read_report,
    scenario_config,
    select_variables,
    selection_report,
    simulate_garchx,
    transform_series,
    volatility_recursion,
    write_prepared_csv,
)

NORMAL = ShockDist("normal")


def write_csv(path, header, rows):
    lines = [header] + rows
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


class TestIngest:
    def test_three_row_file(self, tmp_path):
        path = write_csv(tmp_path / "spx.csv", "Date,Close", [
            "2023-01-02,100.0",
            "2023-01-03,101.5",
            "2023-01-04,99.75",
        ])
        table = ingest_csv([path])
        assert table.dates == ("2023-01-02", "2023-01-03", "2023-01-04")
        assert list(table.columns) == ["spx"]
        assert np.array_equal(table.columns["spx"], [100.0, 101.5, 99.75])
        assert table.rows_in["spx"] == 3
        assert table.dropped["spx"] == 0
        assert table.source["spx"] == str(path)

    def test_missing_cell_drops_row_and_counts_it(self, tmp_path):
        path = write_csv(tmp_path / "spx.csv", "Date,Close", [
            "2023-01-02,100.0",
            "2023-01-03,",
            "2023-01-04,99.75",
            "2023-01-05,98.0",
        ])
        table = ingest_csv([path])
        assert table.rows_in["spx"] == 4
        assert table.dropped["spx"] == 1
        assert len(table.dates) == 3
        assert "2023-01-03" not in table.dates

    def test_never_imputes_rows_in_minus_dropped_is_rows_out(self, tmp_path):
        path = write_csv(tmp_path / "a.csv", "Date,Close", [
            "2023-01-02,1.0",
            "2023-01-03,",
            "2023-01-04,3.0",
            "2023-01-05,",
            "2023-01-06,5.0",
        ])
        table = ingest_csv([path])
        assert table.rows_in["a"] - table.dropped["a"] == len(table.dates)

    def test_two_files_align_on_date_intersection(self, tmp_path):
        dates_a = [f"2023-01-{day:02d}" for day in (2, 3, 4, 5, 6)]
        dates_b = [f"2023-01-{day:02d}" for day in (4, 5, 6, 9, 10)]
        a = write_csv(tmp_path / "a.csv", "Date,Close",
                      [f"{d},{i + 1}.0" for i, d in enumerate(dates_a)])
        b = write_csv(tmp_path / "b.csv", "Date,Close",
                      [f"{d},{10 * (i + 1)}.0" for i, d in enumerate(dates_b)])
        table = ingest_csv([a, b])
        expected = tuple(sorted(set(dates_a) & set(dates_b)))
        assert table.dates == expected
        assert len(table.dates) == 3
        assert np.array_equal(table.columns["a"], [3.0, 4.0, 5.0])
        assert np.array_equal(table.columns["b"], [10.0, 20.0, 30.0])

    def test_multi_column_file_gets_qualified_names(self, tmp_path):
        path = write_csv(tmp_path / "macro.csv", "Date,cpi,vix", [
            "2023-01-02,1.0,2.0",
            "2023-01-03,1.1,2.2",
        ])
        table = ingest_csv([path])
        assert set(table.columns) == {"macro:cpi", "macro:vix"}

    def test_unparseable_cell_names_row_and_column(self, tmp_path):
        path = write_csv(tmp_path / "spx.csv", "Date,Close", [
            "2023-01-02,100.0",
            "2023-01-03,oops",
        ])
        with pytest.raises(DataError, match=r"row 3.*'Close'"):
            ingest_csv([path])

    def test_unparseable_date_names_row(self, tmp_path):
        path = write_csv(tmp_path / "spx.csv", "Date,Close", [
            "2023-01-02,100.0",
            "not-a-date,101.0",
        ])
        with pytest.raises(DataError, match="row 3"):
            ingest_csv([path])

    def test_duplicate_date_rejected(self, tmp_path):
        path = write_csv(tmp_path / "spx.csv", "Date,Close", [
            "2023-01-02,100.0",
            "2023-01-02,101.0",
        ])
        with pytest.raises(DataError, match="duplicate date"):
            ingest_csv([path])

    def test_duplicate_series_name_rejected(self, tmp_path):
        (tmp_path / "one").mkdir()
        (tmp_path / "two").mkdir()
        a = write_csv(tmp_path / "one" / "spx.csv", "Date,Close",
                      ["2023-01-02,1.0"])
        b = write_csv(tmp_path / "two" / "spx.csv", "Date,Close",
                      ["2023-01-02,2.0"])
        with pytest.raises(DataError, match="duplicate series"):
            ingest_csv([a, b])

    def test_disjoint_dates_rejected(self, tmp_path):
        a = write_csv(tmp_path / "a.csv", "Date,Close", ["2023-01-02,1.0"])
        b = write_csv(tmp_path / "b.csv", "Date,Close", ["2024-01-02,1.0"])
        with pytest.raises(DataError, match="common dates"):
            ingest_csv([a, b])

    def test_missing_date_column_rejected(self, tmp_path):
        path = write_csv(tmp_path / "a.csv", "Day,Close", ["2023-01-02,1.0"])
        with pytest.raises(DataError, match="date column"):
            ingest_csv([path])

    def test_no_inputs_rejected(self):
        with pytest.raises(DataError):
            ingest_csv([])

    def test_dates_strictly_increasing_after_sort(self, tmp_path):
        path = write_csv(tmp_path / "a.csv", "Date,Close", [
            "2023-01-04,3.0",
            "2023-01-02,1.0",
            "2023-01-03,2.0",
        ])
        table = ingest_csv([path])
        assert table.dates == ("2023-01-02", "2023-01-03", "2023-01-04")
        assert np.array_equal(table.columns["a"], [1.0, 2.0, 3.0])


def price_table(prices, name="spx", extra=None):
    dates = tuple(f"2023-02-{day:02d}" for day in range(1, len(prices) + 1))
    from garchx import SeriesTable

    columns = {name: np.asarray(prices, dtype=float)}
    if extra:
        columns.update(
            {k: np.asarray(v, dtype=float) for k, v in extra.items()}
        )
    return SeriesTable(dates=dates, columns=columns)


class TestTransforms:
    def test_two_price_log_return(self):
        r = log_returns_x100(np.array([100.0, 110.0]))
        assert round(float(r[0]), 3) == 9.531
        assert r[0] == pytest.approx(100.0 * math.log(1.1), rel=1e-15)

    def test_nonpositive_price_rejected(self):
        with pytest.raises(DataError, match="positive"):
            log_returns_x100(np.array([100.0, 0.0]))
        with pytest.raises(DataError, match="positive"):
            log_returns_x100(np.array([100.0, -3.0]))

    def test_too_short_rejected(self):
        with pytest.raises(DataError):
            log_returns_x100(np.array([100.0]))

    def test_constant_price_gives_zero_eps(self):
        table = price_table([50.0] * 6)
        prepared = transform_series(table, "spx", [])
        assert np.all(prepared.dataset.eps == 0.0)

    def test_demean_flag(self):
        prices = [100.0, 104.0, 101.0, 108.0, 103.0]
        table = price_table(prices)
        raw = log_returns_x100(np.asarray(prices))
        demeaned = transform_series(table, "spx", [])
        kept = transform_series(table, "spx", [], demean=False)
        assert np.allclose(demeaned.dataset.eps, raw - raw.mean())
        assert abs(demeaned.dataset.eps.mean()) < 1e-12
        assert np.array_equal(kept.dataset.eps, raw)

    def test_level_covariate_standardized_to_unit_mean(self):
        vix = [12.0, 14.0, 11.0, 18.0, 15.0]
        table = price_table([100.0, 101.0, 102.0, 103.0, 104.0],
                            extra={"vix": vix})
        prepared = transform_series(table, "spx", [("vix", "level")])
        x = prepared.dataset.X[:, 0]
        trimmed = np.asarray(vix[1:])
        assert x.mean() == pytest.approx(1.0, rel=1e-15)
        assert np.allclose(x, trimmed / trimmed.mean())
        assert prepared.names == ("vix:level",)

    def test_level_covariate_sign_constraints(self):
        table = price_table([100.0, 101.0, 102.0],
                            extra={"bad": [1.0, -2.0, 3.0]})
        with pytest.raises(DataError, match=">= 0"):
            transform_series(table, "spx", [("bad", "level")])
        zero = price_table([100.0, 101.0, 102.0],
                           extra={"flat": [5.0, 0.0, 0.0]})
        with pytest.raises(DataError, match="zero"):
            transform_series(zero, "spx", [("flat", "level")])

    def test_squared_return_is_abs_return_squared(self):
        rng = np.random.default_rng(51)
        prices = 100.0 * np.exp(np.cumsum(0.01 * rng.standard_normal(40)))
        table = price_table(list(prices), extra={"oil": prices[::-1]})
        by_abs = transform_series(table, "spx",
                                  [("oil", "abs_log_return_x100")])
        by_sq = transform_series(table, "spx",
                                 [("oil", "squared_log_return_x100")])
        assert np.allclose(
            by_sq.dataset.X[:, 0], by_abs.dataset.X[:, 0] ** 2, rtol=1e-15
        )
        assert np.all(by_abs.dataset.X >= 0.0)

    def test_output_dates_drop_the_first_observation(self):
        table = price_table([100.0, 101.0, 102.0, 103.0])
        prepared = transform_series(table, "spx", [("spx", "level")])
        assert prepared.dates == table.dates[1:]
        assert len(prepared.dataset.eps) == 3

    def test_unknown_names_and_transforms(self):
        table = price_table([100.0, 101.0, 102.0])
        with pytest.raises(DataError, match="response"):
            transform_series(table, "nope", [])
        with pytest.raises(DataError, match="covariate"):
            transform_series(table, "spx", [("nope", "level")])
        with pytest.raises(DataError, match="transform"):
            transform_series(table, "spx", [("spx", "exp")])

    def test_variance_recursion_never_reads_forward(self):
        # X[t] is dated like eps[t]; the variance at t uses row t-1, so
        # perturbing the final covariate row cannot change any in-sample
        # variance.
        rng = np.random.default_rng(52)
        prices = 100.0 * np.exp(np.cumsum(0.01 * rng.standard_normal(60)))
        vix = 10.0 + rng.uniform(0.0, 5.0, 60)
        table = price_table(list(prices), extra={"vix": vix})
        prepared = transform_series(table, "spx", [("vix", "level")])
        spec = ModelSpec(p=1, q=1, d=1)
        theta = ParamVector(omega=0.1, alpha=[0.15], beta=[0.5], gamma=[0.2])

        def path(X):
            # Pin the presample: the defaults are whole-sample statistics,
            # which would mask the alignment being tested.
            data = Dataset(
                eps=prepared.dataset.eps,
                X=X,
                presample_eps2=np.array([0.5]),
                presample_sigma2=np.array([0.5]),
                presample_X=np.array([1.0]),
            )
            return volatility_recursion(spec, theta, data).sigma2

        base = path(prepared.dataset.X)
        last = prepared.dataset.X.copy()
        last[-1, 0] += 100.0
        assert np.array_equal(path(last), base)
        middle = prepared.dataset.X.copy()
        middle[30, 0] += 100.0
        shifted = path(middle)
        assert np.array_equal(shifted[: 30 + 1], base[: 30 + 1])
        assert shifted[30 + 1] != base[30 + 1]


class TestPreparedFiles:
    def test_write_read_round_trip(self, tmp_path):
        config = scenario_config(
            1, d=3, shocks=NORMAL, gamma=np.array([0.25, 0.0, 0.3])
        )
        sim = simulate_garchx(config, 50, seed=61)
        from garchx import PreparedData

        prepared = PreparedData(
            dataset=Dataset(eps=sim.eps, X=sim.X),
            names=("x1", "x2", "x3"),
            dates=tuple(f"d{i:03d}" for i in range(50)),
        )
        path = tmp_path / "prepared.csv"
        write_prepared_csv(path, prepared)
        back = read_prepared_csv(path)
        assert np.array_equal(back.dataset.eps, prepared.dataset.eps)
        assert np.array_equal(back.dataset.X, prepared.dataset.X)
        assert back.names == prepared.names
        assert back.dates == prepared.dates

    def test_missing_eps_column_rejected(self, tmp_path):
        path = write_csv(tmp_path / "x.csv", "date,x1", ["d1,1.0"])
        with pytest.raises(DataError, match="eps"):
            read_prepared_csv(path)

    def test_gap_rejected_with_location(self, tmp_path):
        path = write_csv(tmp_path / "x.csv", "date,eps,x1", [
            "d1,0.5,1.0",
            "d2,,1.1",
        ])
        with pytest.raises(DataError, match=r"row 3.*'eps'"):
            read_prepared_csv(path)


@pytest.fixture(scope="module")
def selection_outcome():
    config = scenario_config(1, d=5, shocks=NORMAL)
    data = simulate_garchx(config, 1200, seed=62)
    return select_variables(config.spec, data, alpha=0.05)


class TestReports:
    def test_fit_summary_fields(self):
        config = scenario_config(1, d=2, shocks=NORMAL,
                                 gamma=np.array([0.3, 0.2]))
        data = simulate_garchx(config, 600, seed=63)
        fit = fit_qmle(config.spec, data, FitOptions())
        summary = fit_summary(fit)
        assert summary["p"] == 1 and summary["q"] == 1 and summary["d"] == 2
        assert len(summary["alpha"]) == 1
        assert len(summary["gamma"]) == 2
        expected_se = np.sqrt(np.diag(fit.Sigma_hat) / fit.n_obs)
        assert np.allclose(summary["std_err"], expected_se)
        assert summary["n_obs"] == 600
        assert isinstance(summary["converged"], bool)
        assert len(summary["boundary"]) == fit.spec.n_params

    def test_selection_report_schema(self, selection_outcome):
        report = selection_report(selection_outcome)
        assert report["schema_version"] == 1
        assert report["kind"] == "selection_report"
        assert report["method"] == "by_fdr"
        assert report["selected"] == list(selection_outcome.selected)
        assert report["selected_names"] == [
            f"x{k}" for k in selection_outcome.selected
        ]
        tests = report["tests"]
        assert [t["index"] for t in tests] == [1, 2, 3, 4, 5]
        adj = selection_outcome.selection.adjusted_p
        for t in tests:
            # adjusted p-values are reported in input column order
            assert t["adjusted_p"] == float(adj[t["index"] - 1])
            assert t["selected"] == (t["index"] in selection_outcome.selected)
        assert set(report["ic"]) == {"full", "null", "selected"}
        assert "timestamp" not in report

    def test_selected_block_present_only_when_nonempty(self, selection_outcome):
        report = selection_report(selection_outcome)
        if selection_outcome.selected:
            assert "selected" in report["fits"]
        config = scenario_config(1, d=3, shocks=NORMAL, gamma=np.zeros(3))
        data = simulate_garchx(config, 900, seed=64)
        null_outcome = select_variables(config.spec, data, alpha=1e-4)
        if null_outcome.selected == ():
            null_report = selection_report(null_outcome)
            assert null_report["selected"] == []
            assert "selected" not in null_report["fits"]
            assert set(null_report["fits"]) == {"full", "null"}

    def test_custom_names_validated(self, selection_outcome):
        with pytest.raises(DataError, match="names"):
            selection_report(selection_outcome, names=["a", "b"])
        named = selection_report(
            selection_outcome, names=["v", "w", "x", "y", "z"]
        )
        assert named["tests"][0]["name"] == "v"

    def test_repeat_runs_are_byte_identical(self):
        config = scenario_config(1, d=5, shocks=NORMAL)
        texts = []
        for _ in range(2):
            data = simulate_garchx(config, 1200, seed=62)
            outcome = select_variables(config.spec, data, alpha=0.05)
            texts.append(emit_report(selection_report(outcome), "json"))
        assert texts[0] == texts[1]

    def test_json_round_trip(self, selection_outcome):
        report = selection_report(selection_outcome)
        assert read_report(emit_report(report, "json")) == report

    def test_dsv_round_trip(self, selection_outcome):
        report = selection_report(selection_outcome)
        text = emit_report(report, "dsv")
        assert all("|" in line for line in text.strip().splitlines())
        assert read_report(text) == report

    def test_unknown_format_rejected(self):
        with pytest.raises(DataError, match="format"):
            emit_report({"a": 1}, "yaml")

    def test_malformed_dsv_rejected(self):
        with pytest.raises(DataError, match="malformed"):
            read_report("not a report line\n")

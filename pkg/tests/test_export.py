import pandas as pd
import pytest

from crowdgen.errors import MissingReport, ValidationError
from crowdgen.harness import export_results, load_reports
from crowdgen.metrics import MetricReport


def test_single_report_export(tmp_path):
    report = MetricReport('X-1', 'BCA-X', 0.123456789, 2, 0, 'Evacuation1-d10')
    paths = export_results([report], tmp_path)
    metrics = pd.read_csv(paths['metrics'])
    assert list(metrics.columns) == ['scenario_id', 'model_id', 'dtw', 'aa', 'ao']
    assert len(metrics) == 1
    assert paths['metrics'].read_text().splitlines()[1] == 'X-1,BCA-X,0.123457,2,0'
    ranks = pd.read_csv(paths['ranks'])
    assert list(ranks.columns) == ['model_id', 'metric', 'mean_rank']
    assert list(ranks['metric']) == ['dtw', 'aa', 'ao']
    assert (ranks['mean_rank'] == 1.0).all()
    summary = pd.read_csv(paths['summary'])
    assert summary.loc[0, 'mean_rank'] == 1.0
    grouped = pd.read_csv(paths['grouped'])
    assert grouped.loc[0, 'group'] == 'Evacuation1-d10'
    assert grouped.loc[0, 'dtw_std'] == 0.0


def test_reports_round_trip(tmp_path):
    reports = [MetricReport(f's{k}', model, 0.5 * k, k, 1) for k in range(3) for model in ('BCA-G', 'RLA-G')]
    paths = export_results(reports, tmp_path)
    loaded = load_reports(paths['metrics'])
    key = lambda r: (r.model_id, r.scenario_id)
    assert sorted(loaded, key=key) == sorted(reports, key=key)
    assert '\r' not in paths['ranks'].read_text()


def test_nothing_to_export(tmp_path):
    with pytest.raises(MissingReport):
        export_results([], tmp_path)


def test_load_reports_checks_columns(tmp_path):
    path = tmp_path / 'metrics.csv'
    path.write_text('scenario_id,model_id,dtw\ns,BCA-X,1.0\n')
    with pytest.raises(ValidationError):
        load_reports(path)

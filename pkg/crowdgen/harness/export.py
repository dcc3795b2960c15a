"""CSV outputs of an evaluation: per-scenario metrics, mean ranks and grouped statistics."""
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import pandas as pd

from ..errors import MissingReport, ValidationError
from ..metrics import REPORT_COLUMNS, MetricReport, grouped_std, overall_ranks, rank_models, reports_frame

logger = logging.getLogger(__name__)

METRICS_FILE = 'metrics.csv'
RANKS_FILE = 'ranks.csv'
SUMMARY_FILE = 'summary.csv'
GROUPED_FILE = 'grouped.csv'


def write_csv(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    frame.to_csv(path, index=False, float_format='%.6f', lineterminator='\n')
    return path


def export_results(reports: Sequence[MetricReport], output_dir: Union[str, Path],
                   ranks: Optional[pd.DataFrame] = None) -> Dict[str, Path]:
    """Writes the metric, rank, overall-rank and grouped-statistics CSVs; returns their paths."""
    if not reports:
        raise MissingReport('nothing to export')
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    ranks = rank_models(reports) if ranks is None else ranks
    frame = reports_frame(reports).sort_values(['model_id', 'scenario_id'], kind='stable')
    paths = {
        'metrics': write_csv(frame[REPORT_COLUMNS], output_dir / METRICS_FILE),
        'ranks': write_csv(ranks, output_dir / RANKS_FILE),
        'summary': write_csv(overall_ranks(ranks), output_dir / SUMMARY_FILE),
        'grouped': write_csv(grouped_std(reports), output_dir / GROUPED_FILE),
    }
    logger.info('wrote %d reports for %d models to %s', len(frame), frame['model_id'].nunique(), output_dir)
    return paths


def load_reports(path: Union[str, Path]) -> List[MetricReport]:
    """Reads a metric CSV back into reports."""
    frame = pd.read_csv(path, dtype={'scenario_id': str, 'model_id': str})
    missing = set(REPORT_COLUMNS) - set(frame.columns)
    if missing:
        raise ValidationError(f'{path}: missing columns {sorted(missing)}')
    return [MetricReport(scenario_id=row.scenario_id, model_id=row.model_id, dtw=float(row.dtw),
                         aa=int(row.aa), ao=int(row.ao))
            for row in frame.itertuples(index=False)]

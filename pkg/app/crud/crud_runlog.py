import csv
import logging
from pathlib import Path
from typing import Callable, List, Sequence

from app.schemas.metrics import MetricsReport
from app.schemas.training import EpochLogRecord

logger = logging.getLogger(__name__)

METRIC_COLUMNS = ["split", "accuracy", "macro_sensitivity", "macro_precision", "macro_f1", "n_samples"]


def append_epoch(path, record: EpochLogRecord):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "a", encoding="utf-8", newline="\n") as handle:
        handle.write(record.model_dump_json() + "\n")


def epoch_logger(path) -> Callable[[EpochLogRecord], None]:
    """Truncates ``path`` and returns a callback appending one JSON line per epoch."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("", encoding="utf-8")
    return lambda record: append_epoch(path, record)


def load_runlog(path) -> List[EpochLogRecord]:
    with open(path, encoding="utf-8") as handle:
        return [EpochLogRecord.model_validate_json(line) for line in handle if line.strip()]


def save_metrics(path, reports: Sequence[tuple]) -> Path:
    """``reports`` is a sequence of (split name, MetricsReport)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(METRIC_COLUMNS)
        for split, report in reports:
            values = report.model_dump()
            writer.writerow([split] + [values[c] for c in METRIC_COLUMNS[1:]])
    logger.info("Wrote metrics for %s to %s.", ", ".join(s for s, _ in reports), path)
    return path


def load_metrics(path) -> List[dict]:
    with open(path, newline="", encoding="utf-8") as handle:
        return list(csv.DictReader(handle))


def metrics_summary(report: MetricsReport) -> str:
    return (f"accuracy={report.accuracy:.4f} sensitivity={report.macro_sensitivity:.4f} "
            f"precision={report.macro_precision:.4f} f1={report.macro_f1:.4f}")

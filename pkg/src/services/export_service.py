"""
Result export service for CSV and JSON files.
"""
import csv
import io
import json
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
from loguru import logger

from src.core.exceptions import OutputError

SIGNIFICANT_DIGITS = 12


class ExportFormat(str, Enum):
    """Supported export formats."""
    JSON = "json"
    CSV = "csv"


@dataclass
class ExportResult:
    """Result of an export operation."""
    format: ExportFormat
    path: Path
    record_count: int
    created_at: datetime


def format_number(value: float) -> str:
    """Shortest representation with at most 12 significant digits."""
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    text = format(value, f".{SIGNIFICANT_DIGITS}g")
    return "0" if text == "-0" else text


class ResultExportService:
    """Writes RFC 4180 CSV tables and JSON documents."""

    def export_to_csv(
        self,
        rows: List[Dict[str, Any]],
        path: Path,
        columns: Optional[List[str]] = None
    ) -> ExportResult:
        """Write rows with a header; numbers use 12 significant digits."""
        if columns is None:
            columns = list(rows[0].keys()) if rows else []

        output = io.StringIO()
        writer = csv.DictWriter(output, fieldnames=columns, extrasaction="ignore", lineterminator="\r\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: self._to_string(v) for k, v in row.items()})

        self._write(Path(path), output.getvalue())
        logger.debug(f"Wrote {len(rows)} rows to {path}")
        return ExportResult(
            format=ExportFormat.CSV,
            path=Path(path),
            record_count=len(rows),
            created_at=datetime.now(timezone.utc)
        )

    def export_to_json(self, payload: Dict[str, Any], path: Path) -> ExportResult:
        content = json.dumps(self._to_serializable(payload), ensure_ascii=False, indent=2)
        self._write(Path(path), content + "\n")
        return ExportResult(
            format=ExportFormat.JSON,
            path=Path(path),
            record_count=1,
            created_at=datetime.now(timezone.utc)
        )

    def read_csv(self, path: Path) -> List[Dict[str, str]]:
        try:
            with open(path, newline="", encoding="utf-8") as fh:
                return list(csv.DictReader(fh))
        except OSError as e:
            raise OutputError(f"Cannot read {path}: {e}") from e

    def read_json(self, path: Path) -> Dict[str, Any]:
        try:
            return json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, ValueError) as e:
            raise OutputError(f"Cannot read {path}: {e}") from e

    def _write(self, path: Path, content: str):
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", newline="", encoding="utf-8") as fh:
                fh.write(content)
        except OSError as e:
            raise OutputError(f"Cannot write {path}: {e}") from e

    def _to_serializable(self, value: Any) -> Any:
        """Convert numpy values and containers to JSON types."""
        if isinstance(value, dict):
            return {str(k): self._to_serializable(v) for k, v in value.items()}
        if isinstance(value, (list, tuple)):
            return [self._to_serializable(v) for v in value]
        if isinstance(value, np.ndarray):
            return self._to_serializable(value.tolist())
        if isinstance(value, (bool, np.bool_)):
            return bool(value)
        if isinstance(value, (int, np.integer)):
            return int(value)
        if isinstance(value, (float, np.floating)):
            value = float(value)
            return value if math.isfinite(value) else None
        if isinstance(value, Enum):
            return value.value
        return value

    def _to_string(self, value: Any) -> str:
        """Convert value to string for CSV."""
        if value is None:
            return ""
        if isinstance(value, (bool, np.bool_)):
            return "true" if value else "false"
        if isinstance(value, (int, np.integer)):
            return str(int(value))
        if isinstance(value, (float, np.floating)):
            return format_number(float(value))
        if isinstance(value, Enum):
            return str(value.value)
        return str(value)


# Global instance
result_export_service = ResultExportService()

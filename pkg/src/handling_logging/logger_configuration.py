"""JSON-lines formatter for the rotating run log."""
import datetime as dt
import json
import logging

import numpy as np

# Attributes every LogRecord carries; anything else on a record came in through ``extra=``
_STANDARD_ATTRS = frozenset(vars(logging.LogRecord("", 0, "", 0, "", (), None))) | {"message", "asctime", "taskName"}


def record_extras(record: logging.LogRecord) -> dict:
    """Fields attached to ``record`` by ``extra=``."""
    return {key: value for key, value in vars(record).items() if key not in _STANDARD_ATTRS}


def _to_json(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    return str(value)


class JSONFormatter(logging.Formatter):
    """One JSON object per record.

    ``fields`` maps output keys to LogRecord attributes. Training records add
    ``iteration``, the losses and ``val_frechet`` through ``extra=``; those land
    as top-level keys next to the mapped ones.
    """

    def __init__(self, *, fields: dict[str, str] | None = None):
        super().__init__()
        self.fields = dict(fields or {})

    def format(self, record: logging.LogRecord) -> str:
        entry = {key: self._attribute(record, attr) for key, attr in self.fields.items()}
        entry.setdefault("timestamp", self._timestamp(record))
        entry.setdefault("message", record.getMessage())
        if record.exc_info:
            entry["exc_info"] = self.formatException(record.exc_info)
        if record.stack_info:
            entry["stack_info"] = self.formatStack(record.stack_info)
        entry.update(record_extras(record))
        return json.dumps(entry, default=_to_json)

    def _attribute(self, record: logging.LogRecord, attr: str):
        if attr == "message":
            return record.getMessage()
        if attr == "timestamp":
            return self._timestamp(record)
        return getattr(record, attr, None)

    @staticmethod
    def _timestamp(record: logging.LogRecord) -> str:
        return dt.datetime.fromtimestamp(record.created, tz=dt.timezone.utc).isoformat()

"""Atomic JSON/CSV writers and the scan-table reader."""
from __future__ import annotations

import csv
import json
import math
import os
import tempfile

from .errors import ConfigError
from .scan import ScanRecord, ScanTable

SCHEMA_VERSION = 1
SCAN_COLUMNS = ("eta", "omega_eff", "chi", "status")


def _atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _clean(value):
    """JSON has no NaN or infinity; map them to null."""
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


def dumps(document):
    return json.dumps(_clean(document), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, document):
    _atomic_write(path, dumps(document))


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "" if math.isnan(value) else repr(value)
    return str(value)


def write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        cells = [_cell(v) for v in row]
        lines.append(",".join(f'"{c}"' if "," in c else c for c in cells))
    _atomic_write(path, "\n".join(lines) + "\n")


def scan_rows(table: ScanTable):
    for r in table.records:
        omega = math.sqrt(r.omega_eff_sq) if r.converged and r.omega_eff_sq > 0 else None
        yield (r.eta, omega, r.chi, r.stop_reason)


def read_scan_csv(path, lam=float("nan")) -> ScanTable:
    """Read a table written by the ``scan`` command (columns eta, omega_eff, chi, status)."""
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            missing = [c for c in ("eta", "chi") if c not in (reader.fieldnames or [])]
            if missing:
                raise ConfigError(f"{path}: missing column(s) {', '.join(missing)}")
            records = []
            for lineno, row in enumerate(reader, start=2):
                try:
                    eta = float(row["eta"])
                    chi = float(row["chi"]) if row["chi"] else None
                except ValueError as exc:
                    raise ConfigError(f"{path}:{lineno}: {exc}") from exc
                status = row.get("status") or ("converged" if chi is not None else "censored")
                if status != "converged":
                    chi = None
                omega_sq = 1.0 / chi if chi else float("nan")
                records.append(ScanRecord(eta, omega_sq, chi, status))
    except OSError as exc:
        raise ConfigError(f"cannot read scan table {path}: {exc.strerror}") from exc
    records.sort(key=lambda r: r.eta)
    return ScanTable(lam, tuple(records), {"source": os.path.basename(path)})

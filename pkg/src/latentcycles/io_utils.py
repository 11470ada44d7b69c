"""File formats: dataset CSV, truth/graph/summary JSON, sample archives.

CSV dialect: comma separator, `.` decimal, mandatory header with columns
Y1..YQ then X1..XS, UTF-8, LF or CRLF. JSON writers sort keys and use a
fixed float representation so identical runs produce identical bytes.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import asdict, is_dataclass
from pathlib import Path

import numpy as np

from .model import Dataset, GroundTruthGraph, ValidationError


def write_dataset_csv(path, data: Dataset) -> None:
    header = [f"Y{j + 1}" for j in range(data.Q)] + [f"X{j + 1}" for j in range(data.S)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i in range(data.n):
            row = list(data.Y[i]) + (list(data.X[i]) if data.S else [])
            writer.writerow([repr(float(v)) for v in row])


def read_dataset_csv(path) -> Dataset:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty file, header required") from None
        header = [h.strip() for h in header]
        q = sum(1 for h in header if re.fullmatch(r"Y\d+", h))
        s = sum(1 for h in header if re.fullmatch(r"X\d+", h))
        expected = [f"Y{j + 1}" for j in range(q)] + [f"X{j + 1}" for j in range(s)]
        if q == 0 or header != expected:
            raise ValidationError(
                f"{path}: header must be Y1..YQ then X1..XS, got {header}"
            )
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != q + s:
                raise ValidationError(
                    f"{path}: line {lineno}: expected {q + s} fields, got {len(row)}"
                )
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise ValidationError(
                    f"{path}: line {lineno}: non-numeric value in {row}"
                ) from None
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    arr = np.asarray(rows)
    data = Dataset(Y=arr[:, :q], X=arr[:, q:q + s])
    data.validate()
    return data


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        if obj.dtype == bool:
            return obj.astype(int).tolist()
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if is_dataclass(obj) and not isinstance(obj, type):
        return _jsonable(asdict(obj))
    return obj


def write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(obj), fh, sort_keys=True, indent=2)
        fh.write("\n")


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def write_truth_json(path, truth: GroundTruthGraph, params=None) -> None:
    payload = {
        "b_support": truth.b_support,
        "a_support": truth.a_support,
        "l_support": truth.l_support,
        "p_star": truth.p_star,
    }
    if params is not None:
        payload["parameters"] = {
            "mu": params.mu, "A": params.A, "B": params.B,
            "L": params.L, "sigma2": params.sigma2,
        }
    write_json(path, payload)


def read_support_json(path) -> dict:
    """Boolean supports from a truth.json or graph.json file.

    Accepts either *_support (truth) or *_edges (estimate) key spellings.
    """
    raw = read_json(path)
    out = {}
    for base in ("b", "a", "l"):
        for suffix in ("support", "edges"):
            key = f"{base}_{suffix}"
            if key in raw:
                out[f"{base}_support"] = np.asarray(raw[key], dtype=bool)
                break
    if "b_support" not in out:
        raise ValidationError(f"{path}: no b_support or b_edges key")
    if "p_star" in raw:
        out["p_star"] = int(raw["p_star"])
    return out


def write_samples_ndjson(path, samples: list[dict]) -> None:
    """One retained posterior sample per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for s in samples:
            fh.write(json.dumps(_jsonable(s), sort_keys=True))
            fh.write("\n")


def read_samples_ndjson(path) -> list[dict]:
    samples = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                raw = json.loads(line)
                samples.append({
                    k: np.asarray(v) if isinstance(v, list) else v
                    for k, v in raw.items()
                })
    return samples


def write_manifest(path, command: str, config_snapshot: dict, seed,
                   outputs: list[str], elapsed_seconds: float) -> None:
    from . import __version__

    write_json(path, {
        "command": command,
        "config": config_snapshot,
        "seed": seed,
        "version": __version__,
        "elapsed_seconds": round(float(elapsed_seconds), 3),
        "outputs": sorted(str(Path(p).name) for p in outputs),
    })

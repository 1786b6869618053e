"""On-disk formats: npz tensor containers, schema-tagged CSV, manifests.

Every writer goes through a temp file in the destination directory followed
by os.replace, so readers never observe a partially written artifact.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Sequence

import numpy as np
import yaml

from .ttcore import TTOperator, TTVector
from .unitary import UnitaryMPO

FORMAT_VERSION = 1

_KIND_MPS = "tt-vector"
_KIND_MPO = "tt-operator"
_KIND_UNITARY = "unitary-mpo"


def _atomic_write_bytes(path: Path, payload: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_write_text(path: Path, text: str) -> None:
    _atomic_write_bytes(Path(path), text.encode("utf-8"))


def _npz_payload(
    kind: str, arrays: Sequence[np.ndarray], extra: dict | None = None
) -> bytes:
    buf = io.BytesIO()
    named = {f"core_{i:03d}": np.asarray(a) for i, a in enumerate(arrays)}
    np.savez(
        buf,
        version=np.int64(FORMAT_VERSION),
        kind=np.bytes_(kind.encode("ascii")),
        count=np.int64(len(arrays)),
        **(extra or {}),
        **named,
    )
    return buf.getvalue()


def _load_npz(
    path: Path, expect_kind: str, extra_keys: Sequence[str] = ()
) -> tuple[list[np.ndarray], dict]:
    with np.load(Path(path)) as data:
        if "version" not in data or "kind" not in data:
            raise ValueError(f"{path}: not a recognized tensor container")
        version = int(data["version"])
        if version != FORMAT_VERSION:
            raise ValueError(
                f"{path}: format version {version} unsupported "
                f"(expected {FORMAT_VERSION})"
            )
        kind = bytes(data["kind"]).decode("ascii")
        if kind != expect_kind:
            raise ValueError(f"{path}: contains {kind!r}, expected {expect_kind!r}")
        count = int(data["count"])
        for key in extra_keys:
            if key not in data:
                raise ValueError(f"{path}: missing field {key!r}")
        extra = {key: data[key] for key in extra_keys}
        return [np.asarray(data[f"core_{i:03d}"]) for i in range(count)], extra


def save_tt_vector(path: str | Path, tt: TTVector) -> None:
    _atomic_write_bytes(Path(path), _npz_payload(_KIND_MPS, tt.cores))


def load_tt_vector(path: str | Path) -> TTVector:
    return TTVector(_load_npz(Path(path), _KIND_MPS)[0])


def save_tt_operator(path: str | Path, tt: TTOperator) -> None:
    _atomic_write_bytes(Path(path), _npz_payload(_KIND_MPO, tt.cores))


def load_tt_operator(path: str | Path) -> TTOperator:
    return TTOperator(_load_npz(Path(path), _KIND_MPO)[0])


def save_unitary_mpo(path: str | Path, umpo: UnitaryMPO) -> None:
    payload = _npz_payload(
        _KIND_UNITARY, umpo.gates, extra={"scale": np.float64(umpo.scale)}
    )
    _atomic_write_bytes(Path(path), payload)


def load_unitary_mpo(path: str | Path) -> UnitaryMPO:
    gates, extra = _load_npz(Path(path), _KIND_UNITARY, extra_keys=("scale",))
    return UnitaryMPO(tuple(gates), scale=float(extra["scale"]))


def write_csv(
    path: str | Path,
    schema: str,
    header: Sequence[str],
    rows: Sequence[Sequence[object]],
) -> None:
    """CSV with a `# schema=<name>` comment line above the header row."""
    buf = io.StringIO()
    buf.write(f"# schema={schema}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(header))
    for row in rows:
        writer.writerow(list(row))
    _atomic_write_text(Path(path), buf.getvalue())


def read_csv(path: str | Path) -> tuple[str, list[str], list[list[str]]]:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# schema="):
        raise ValueError(f"{path}: missing schema comment line")
    schema = lines[0][len("# schema=") :]
    reader = csv.reader(lines[1:])
    table = [row for row in reader if row]
    if not table:
        raise ValueError(f"{path}: missing header row")
    return schema, table[0], table[1:]


def write_config_snapshot(path: str | Path, config: dict) -> None:
    """YAML dump of the resolved run configuration."""
    text = yaml.safe_dump(config, sort_keys=True, default_flow_style=False)
    _atomic_write_text(Path(path), text)


def read_config(path: str | Path) -> dict:
    loaded = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    if loaded is None:
        return {}
    if not isinstance(loaded, dict):
        raise ValueError(f"{path}: config must be a mapping")
    return loaded


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(directory: str | Path, manifest_name: str = "manifest.json") -> Path:
    """Sorted sha256 listing of every artifact in a run directory.

    Contains no timestamps, so identical runs produce identical manifests.
    """
    directory = Path(directory)
    entries = {}
    for item in sorted(directory.rglob("*")):
        if not item.is_file() or item.name == manifest_name:
            continue
        entries[item.relative_to(directory).as_posix()] = sha256_file(item)
    payload = json.dumps({"version": FORMAT_VERSION, "files": entries}, indent=2)
    out = directory / manifest_name
    _atomic_write_text(out, payload + "\n")
    return out

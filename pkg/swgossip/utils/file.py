"""
File helpers. Every writer goes through ``resolve_output`` so nothing lands outside
the output directory.
"""

import hashlib
import json
from pathlib import Path
from typing import Any, Dict, Union

import pandas as pd

from ..core.exceptions import StorageError
from .json_utils import to_jsonable

PathLike = Union[str, Path]


def ensure_directory(path: PathLike) -> Path:
    """Create ``path`` (and parents) if missing."""
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise StorageError(f"cannot create directory {path}: {e}", {"path": str(path)})
    return path


def resolve_output(output_dir: PathLike, name: PathLike) -> Path:
    """Path of ``name`` inside ``output_dir``.

    Raises:
        StorageError: If ``name`` escapes the output directory
    """
    root = Path(output_dir).resolve()
    target = (root / name).resolve()
    if target != root and root not in target.parents:
        raise StorageError(f"refusing to write outside {root}", {"target": str(target)})
    return target


def write_text(output_dir: PathLike, name: PathLike, content: str) -> Path:
    target = resolve_output(output_dir, name)
    ensure_directory(target.parent)
    try:
        with open(target, "w", encoding="utf-8", newline="\n") as f:
            f.write(content)
    except OSError as e:
        raise StorageError(f"cannot write {target}: {e}", {"path": str(target)})
    return target


def write_json(output_dir: PathLike, name: PathLike, data: Any) -> Path:
    """Write ``data`` as indented, key-sorted JSON; infinities become ``"inf"``."""
    text = json.dumps(to_jsonable(data), ensure_ascii=False, indent=2, sort_keys=True, allow_nan=False)
    return write_text(output_dir, name, text + "\n")


def write_csv(output_dir: PathLike, name: PathLike, frame: pd.DataFrame) -> Path:
    """Write a table with 17 significant digits so floats round-trip."""
    return write_text(output_dir, name, frame.to_csv(index=False, float_format="%.17g", lineterminator="\n"))


def read_json(path: PathLike) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise StorageError(f"cannot read JSON {path}: {e}", {"path": str(path)})


def blob_sha1(path: PathLike) -> str:
    """Git blob hash of a file (``sha1("blob <size>\\0" + content)``)."""
    try:
        content = Path(path).read_bytes()
    except OSError as e:
        raise StorageError(f"cannot hash {path}: {e}", {"path": str(path)})
    return hashlib.sha1(b"blob %d\0" % len(content) + content).hexdigest()

"""Study manifests: config, seeds, version and content hashes of the outputs."""

from pathlib import Path
from typing import Any, Dict, Iterable, Optional

from loguru import logger
from pydantic import BaseModel

from ..core.logging import log_json_data
from ..utils.file import blob_sha1, write_json

MANIFEST_NAME = "manifest.json"


def build_manifest(
    command: str,
    config: BaseModel,
    seeds: Dict[str, Any],
    outputs: Iterable[Path],
    extra: Optional[Dict[str, Any]] = None,
) -> Dict[str, Any]:
    """Manifest document; output hashes are git blob SHA-1s keyed by file name."""
    from .. import __version__

    manifest = {
        "command": command,
        "version": __version__,
        "config": config.model_dump(mode="json"),
        "seeds": seeds,
        "outputs": {Path(p).name: blob_sha1(p) for p in sorted(outputs, key=lambda p: Path(p).name)},
    }
    if extra:
        manifest.update(extra)
    return manifest


def write_manifest(
    output_dir: Path,
    command: str,
    config: BaseModel,
    seeds: Dict[str, Any],
    outputs: Iterable[Path],
    extra: Optional[Dict[str, Any]] = None,
) -> Path:
    manifest = build_manifest(command, config, seeds, outputs, extra)
    log_json_data("manifest", manifest)
    path = write_json(output_dir, MANIFEST_NAME, manifest)
    logger.info(f"manifest written to {path}")
    return path

from .file import blob_sha1, ensure_directory, read_json, resolve_output, write_csv, write_json, write_text
from .json_utils import to_jsonable

__all__ = [
    "blob_sha1",
    "ensure_directory",
    "read_json",
    "resolve_output",
    "write_csv",
    "write_json",
    "write_text",
    "to_jsonable",
]

"""Self-describing checkpoint archives.

A checkpoint is a zip holding `header.json` (format version, configs, epoch,
step, rng root seed) and one `arrays/<name>.npy` entry per named parameter or
optimizer buffer. The npy format already records shape, dtype and byte order;
all floating arrays are stored as little-endian float32. Loads are all-or-
nothing: the archive is fully parsed before anything is handed back.
"""

import io
import json
import zipfile
from pathlib import Path

import numpy as np

from .errors import CheckpointError

FORMAT_VERSION = 1


def save_archive(path, header: dict, arrays: dict[str, np.ndarray]) -> None:
    """Write atomically: build in a temp file, then rename over the target."""
    path = Path(path)
    doc = dict(header)
    doc["format_version"] = FORMAT_VERSION
    doc["array_names"] = sorted(arrays)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with zipfile.ZipFile(tmp, "w", compression=zipfile.ZIP_DEFLATED) as zf:
        zf.writestr("header.json", json.dumps(doc, indent=1, sort_keys=True))
        for name in sorted(arrays):
            arr = np.asarray(arrays[name])
            if arr.dtype.kind == "f":
                arr = arr.astype("<f4")
            buf = io.BytesIO()
            np.save(buf, arr)
            zf.writestr(f"arrays/{name}.npy", buf.getvalue())
    tmp.replace(path)


def load_archive(path) -> tuple[dict, dict[str, np.ndarray]]:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint {path} does not exist")
    try:
        with zipfile.ZipFile(path) as zf:
            header = json.loads(zf.read("header.json"))
            version = header.get("format_version")
            if version != FORMAT_VERSION:
                raise CheckpointError(
                    f"{path}: checkpoint format_version {version!r}, expected {FORMAT_VERSION}"
                )
            arrays = {}
            for name in header.get("array_names", []):
                data = zf.read(f"arrays/{name}.npy")
                arrays[name] = np.load(io.BytesIO(data))
            return header, arrays
    except CheckpointError:
        raise
    except (zipfile.BadZipFile, KeyError, json.JSONDecodeError, OSError, ValueError) as exc:
        raise CheckpointError(f"corrupt checkpoint {path}: {exc}") from exc

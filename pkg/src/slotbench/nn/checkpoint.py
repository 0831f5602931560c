"""Single-file checkpoint: JSON header (architecture echo + tensor index)
followed by a raw little-endian tensor payload."""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Any

import numpy as np
import torch

from ..errors import FormatError

_MAGIC = b"SBCK"


def save_checkpoint(path: str | Path, architecture: dict[str, Any],
                    tensors: dict[str, torch.Tensor]) -> None:
    entries = []
    payload = bytearray()
    for name, tensor in tensors.items():
        arr = tensor.detach().cpu().contiguous().numpy()
        entries.append({
            "name": name,
            "dtype": str(arr.dtype),
            "shape": list(arr.shape),
            "offset": len(payload),
            "nbytes": arr.nbytes,
        })
        payload += arr.tobytes()
    header = json.dumps({"architecture": architecture, "tensors": entries}).encode()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<Q", len(header)))
        f.write(header)
        f.write(payload)


def load_checkpoint(path: str | Path) -> tuple[dict[str, Any], dict[str, torch.Tensor]]:
    path = Path(path)
    if not path.is_file():
        raise FormatError(f"no checkpoint at {path}")
    raw = path.read_bytes()
    if raw[:4] != _MAGIC:
        raise FormatError(f"{path} is not a slotbench checkpoint")
    (header_len,) = struct.unpack("<Q", raw[4:12])
    try:
        header = json.loads(raw[12:12 + header_len].decode())
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise FormatError(f"corrupt checkpoint header in {path}: {exc}") from exc
    base = 12 + header_len
    tensors = {}
    for entry in header["tensors"]:
        start = base + entry["offset"]
        buf = raw[start:start + entry["nbytes"]]
        if len(buf) != entry["nbytes"]:
            raise FormatError(f"truncated payload for tensor {entry['name']!r} in {path}")
        arr = np.frombuffer(buf, dtype=np.dtype(entry["dtype"])).reshape(entry["shape"])
        tensors[entry["name"]] = torch.from_numpy(arr.copy())
    return header["architecture"], tensors

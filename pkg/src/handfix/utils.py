"""Shared plumbing: deterministic seed derivation, content hashing, PNG I/O, flat configs."""

import hashlib
import json
import os
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image

DEPTH_SCALE = 65535  # 16-bit depth quantization


def child_seed(base_seed: int, *keys) -> int:
    """Derive a stable 63-bit seed from a base seed and arbitrary string/int keys.

    Uses blake2b, not hash(): Python's hash() is process-salted.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(base_seed)).encode())
    for k in keys:
        h.update(b"\x1f")
        h.update(str(k).encode())
    return int.from_bytes(h.digest(), "little") & 0x7FFF_FFFF_FFFF_FFFF


def tensor_content_hash(array) -> str:
    """sha256 of a tensor/array's dtype, shape and raw bytes."""
    a = np.ascontiguousarray(np.asarray(array))
    h = hashlib.sha256()
    h.update(str(a.dtype).encode())
    h.update(str(a.shape).encode())
    h.update(a.tobytes())
    return h.hexdigest()


def save_image_rgb(path, image: np.ndarray) -> None:
    """Write a float image in [0,1], shape (H,W,3), as 8-bit RGB PNG."""
    arr = np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0)
    Image.fromarray((arr * 255.0).round().astype(np.uint8), mode="RGB").save(path)


def load_image_rgb(path) -> np.ndarray:
    arr = np.asarray(Image.open(path).convert("RGB"), dtype=np.float64)
    return (arr / 255.0).astype(np.float32)


def save_depth16(path, depth: np.ndarray) -> None:
    """Write a float depth map in [0,1], shape (H,W), as 16-bit single-channel PNG."""
    arr = np.clip(np.asarray(depth, dtype=np.float64), 0.0, 1.0)
    q = (arr * DEPTH_SCALE).round().astype(np.uint16)
    Image.fromarray(q, mode="I;16").save(path)


def load_depth16(path) -> np.ndarray:
    q = np.asarray(Image.open(path), dtype=np.uint16)
    return (q.astype(np.float64) / DEPTH_SCALE).astype(np.float32)


def write_jsonl(path, records) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = tempfile.NamedTemporaryFile(
        "w", dir=path.parent, prefix=path.name, suffix=".tmp", delete=False
    )
    try:
        with tmp:
            for rec in records:
                tmp.write(json.dumps(rec, sort_keys=True) + "\n")
        os.replace(tmp.name, path)
    except BaseException:
        os.unlink(tmp.name)
        raise


def read_jsonl(path):
    out = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out


def atomic_torch_save(obj, path) -> None:
    """Checkpoint write via temp file + rename so readers never see partial files."""
    import torch

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    os.close(fd)
    try:
        torch.save(obj, tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class ConfigError(ValueError):
    """Bad key or value in a flat key=value config."""


def parse_flat_config(text: str) -> dict:
    """Parse 'key = value' lines; '#' starts a comment; values stay strings."""
    out = {}
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {ln}: expected key=value, got {raw!r}")
        key, val = line.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def coerce_config(raw: dict, schema: dict) -> dict:
    """Coerce string values against {key: (type, default)}; unknown keys are errors."""
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(
            f"unknown config keys: {', '.join(unknown)}; valid keys: {', '.join(sorted(schema))}"
        )
    out = {}
    for key, (typ, default) in schema.items():
        if key not in raw:
            out[key] = default
            continue
        val = raw[key]
        try:
            if typ is bool:
                out[key] = str(val).lower() in ("1", "true", "yes", "on")
            else:
                out[key] = typ(val)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"config key {key}: cannot parse {val!r} as {typ.__name__}") from exc
    return out

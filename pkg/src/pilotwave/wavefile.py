"""Binary wave-function frames and the frame manifest.

Layout of one frame file (little endian)::

    b"BWF1"  u32 version  u32 D
    D x (f64 lo, f64 hi)  D x u64 points  u32 spin_components  f64 time
    amplitudes: complex128 interleaved (re, im), spin slowest, then axis 0, 1, ...
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .grid import Grid, WaveFunction

MAGIC = b"BWF1"
VERSION = 1


def write_frame(path, psi: WaveFunction) -> None:
    g = psi.grid
    head = [MAGIC, struct.pack("<II", VERSION, g.dims)]
    for lo, hi in g.extents:
        head.append(struct.pack("<dd", lo, hi))
    head.append(struct.pack(f"<{g.dims}Q", *g.points))
    head.append(struct.pack("<Id", psi.spin_components, psi.time))
    with open(path, "wb") as fh:
        fh.write(b"".join(head))
        fh.write(np.ascontiguousarray(psi.amplitudes, dtype="<c16").tobytes())


def read_frame(path) -> WaveFunction:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise ValueError(f"{path}: not a BWF1 frame")
    version, D = struct.unpack_from("<II", data, 4)
    if version != VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    off = 12
    ext = []
    for _ in range(D):
        ext.append(struct.unpack_from("<dd", data, off))
        off += 16
    pts = struct.unpack_from(f"<{D}Q", data, off)
    off += 8 * D
    S, t = struct.unpack_from("<Id", data, off)
    off += 12
    grid = Grid(tuple(ext), tuple(int(p) for p in pts))
    count = S * int(np.prod(pts))
    amps = np.frombuffer(data, dtype="<c16", count=count, offset=off).reshape((S,) + grid.shape)
    return WaveFunction(grid, amps, t)


def write_frames(directory, frames, potential: dict | None = None, config_hash: str = "") -> Path:
    """Write frames as ``frame_00000.bwf`` ... and a ``frames.json`` manifest."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    names, times = [], []
    for i, psi in enumerate(frames):
        name = f"frame_{i:05d}.bwf"
        write_frame(d / name, psi)
        names.append(name)
        times.append(psi.time)
    manifest = {"format": "BWF1", "frames": names, "times": times,
                "potential": potential or {}, "config_hash": config_hash}
    path = d / "frames.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path


def read_manifest(path) -> dict:
    return json.loads(Path(path).read_text())

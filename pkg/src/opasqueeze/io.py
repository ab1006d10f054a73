"""On-disk formats.

Kernel matrices and decompositions go into a small self-describing binary
container::

    b"OPSQ" | uint16 version | uint32 header length | JSON header | raw arrays

The JSON header lists every array (name, dtype, shape) in storage order plus
free-form metadata. Plot data is written as CSV preceded by ``#`` comment
lines carrying the config hash and units. All files are written atomically.
"""

from __future__ import annotations

import csv
import io
import json
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from opasqueeze.blochmessiah import SqueezerDecomposition
from opasqueeze.propagation import GreenPair, MediumSpec, PumpPulse
from opasqueeze.spectral import FrequencyGrid, KernelMatrix, SpectralAmplitude

MAGIC = b"OPSQ"
VERSION = 1


def write_atomic(path: str | Path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps_container(arrays: dict[str, np.ndarray], meta: dict) -> bytes:
    entries, blobs = [], []
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr)
        dtype = arr.dtype.newbyteorder("<") if arr.dtype.byteorder == ">" else arr.dtype
        arr = arr.astype(dtype.newbyteorder("<"), copy=False)
        entries.append({"name": name, "dtype": arr.dtype.str, "shape": list(arr.shape)})
        blobs.append(arr.tobytes())
    header = json.dumps({"arrays": entries, "meta": meta}, sort_keys=True).encode()
    return MAGIC + struct.pack("<HI", VERSION, len(header)) + header + b"".join(blobs)


def loads_container(data: bytes) -> tuple[dict, dict[str, np.ndarray]]:
    if data[:4] != MAGIC:
        raise ValueError("not an opasqueeze container (bad magic)")
    version, hlen = struct.unpack("<HI", data[4:10])
    if version != VERSION:
        raise ValueError(f"unsupported container version {version}")
    header = json.loads(data[10 : 10 + hlen])
    offset = 10 + hlen
    arrays = {}
    for entry in header["arrays"]:
        dtype = np.dtype(entry["dtype"])
        count = int(np.prod(entry["shape"], dtype=np.int64))
        arr = np.frombuffer(data, dtype=dtype, count=count, offset=offset)
        arrays[entry["name"]] = arr.reshape(entry["shape"]).copy()
        offset += count * dtype.itemsize
    if offset != len(data):
        raise ValueError("container is truncated or has trailing bytes")
    return header["meta"], arrays


@dataclass(frozen=True)
class Tabulated:
    """k(omega) known only at grid points (restored from a saved Green pair)."""

    omega: np.ndarray
    values: np.ndarray

    def k(self, omega):
        return np.interp(np.asarray(omega, dtype=float), self.omega, self.values)


def save_green_pair(path, g: GreenPair, meta: dict | None = None) -> None:
    write_atomic(path, dumps_green_pair(g, meta))


def dumps_green_pair(g: GreenPair, meta: dict | None = None) -> bytes:
    grid = g.grid
    arrays = {"C": g.C.entries, "S": g.S.entries}
    info = {"kind": "green-pair", "grid": grid.to_dict(), "picture": g.picture, "units": {
        "omega": "rad/fs", "kernel": "fs (kernel entries; operator action multiplies by the grid step)",
        "length": "mm"}}
    if g.medium is not None:
        arrays["k_signal"] = np.asarray(g.medium.signal_dispersion.k(grid.omega), dtype=float)
        info["length_mm"] = g.medium.length
        info["nonlinear_length_mm"] = g.medium.nonlinear_length
    if g.pump is not None:
        info["pump"] = {"omega_p": g.pump.omega_p, "tau_p": g.pump.tau_p, "chirp": g.pump.chirp}
    info["solver"] = _jsonable(g.metadata)
    info.update(meta or {})
    return dumps_container(arrays, info)


def load_green_pair(path) -> GreenPair:
    meta, arrays = loads_container(Path(path).read_bytes())
    if meta.get("kind") != "green-pair":
        raise ValueError(f"{path} does not hold a Green pair")
    grid = FrequencyGrid(**meta["grid"])
    medium = pump = None
    if "k_signal" in arrays:
        tab = Tabulated(grid.omega, arrays["k_signal"])
        medium = MediumSpec(meta["length_mm"], meta["nonlinear_length_mm"], tab, None)
    if "pump" in meta:
        pump = PumpPulse(**meta["pump"])
    return GreenPair(
        KernelMatrix(grid, grid, arrays["C"]),
        KernelMatrix(grid, grid, arrays["S"]),
        medium,
        pump,
        meta["picture"],
        dict(meta.get("solver", {})),
    )


def save_decomposition(path, d: SqueezerDecomposition, meta: dict | None = None) -> None:
    write_atomic(path, dumps_decomposition(d, meta))


def dumps_decomposition(d: SqueezerDecomposition, meta: dict | None = None) -> bytes:
    arrays = {"zetas": d.zetas, "output_modes": d.output_matrix(), "input_modes": d.input_matrix()}
    info = {"kind": "decomposition", "grid": d.grid.to_dict(), "residuals": d.residuals,
            "metadata": _jsonable(d.metadata), "units": {"omega": "rad/fs", "modes": "fs^1/2"}}
    info.update(meta or {})
    return dumps_container(arrays, info)


def load_decomposition(path) -> SqueezerDecomposition:
    meta, arrays = loads_container(Path(path).read_bytes())
    if meta.get("kind") != "decomposition":
        raise ValueError(f"{path} does not hold a decomposition")
    grid = FrequencyGrid(**meta["grid"])
    out = [SpectralAmplitude(grid, v) for v in arrays["output_modes"].T]
    inp = [SpectralAmplitude(grid, v) for v in arrays["input_modes"].T]
    return SqueezerDecomposition(arrays["zetas"], out, inp, meta["residuals"], meta["metadata"])


def _jsonable(obj):
    return json.loads(json.dumps(obj, default=_default))


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    return str(o)


def format_value(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12e}"
    return str(v)


def csv_bytes(header: list[str], rows, comments: dict | None = None, block_size: int | None = None) -> bytes:
    """CSV text with a ``# key: value`` comment block.

    ``block_size`` inserts a blank line after every that many rows, the
    layout gnuplot expects for gridded surface data.
    """
    buf = io.StringIO()
    for key, value in (comments or {}).items():
        text = json.dumps(value, sort_keys=True) if isinstance(value, (dict, list)) else str(value)
        buf.write(f"# {key}: {text}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for i, row in enumerate(rows):
        writer.writerow([format_value(v) for v in row])
        if block_size and (i + 1) % block_size == 0:
            buf.write("\n")
    return buf.getvalue().encode()


def read_csv_comments(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        if not line.startswith("#"):
            break
        key, _, value = line[1:].partition(":")
        out[key.strip()] = value.strip()
    return out


def read_csv_table(path) -> tuple[list[str], np.ndarray]:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    return header, np.array([[float(x) for x in row] for row in reader])

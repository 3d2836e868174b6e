"""On-disk model format.

::

    AGROPOMDP-MODEL v1
    meta <key>=<value> ...          # zero or more
    gru <input> <hidden>            # recurrent nets only, first layer
    dense <in> <out> <activation>   # one line per dense layer
    end
    <payload>

The payload holds every parameter tensor in declaration order (GRU gates
z, r, h as W, U, b; then each dense layer as W, b), flattened row-major as
little-endian float64.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import DataError
from .nn import GruCell, MlpNetwork, RecurrentQNetwork

MAGIC = "AGROPOMDP-MODEL v1"
_LE = np.dtype("<f8")


def atomic_write(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _descriptor(net) -> list[str]:
    lines = []
    head = net
    if isinstance(net, RecurrentQNetwork):
        lines.append(f"gru {net.gru.input_size} {net.gru.hidden_size}")
        head = net.head
    for w, act in zip(head.weights, head.activations):
        lines.append(f"dense {w.shape[1]} {w.shape[0]} {act}")
    return lines


def dumps_model(net, meta: dict | None = None) -> bytes:
    lines = [MAGIC]
    for k, v in (meta or {}).items():
        if any(c in f"{k}{v}" for c in " \n="):
            raise DataError(f"meta entry {k}={v!r} may not contain spaces, '=' or newlines")
        lines.append(f"meta {k}={v}")
    lines += _descriptor(net)
    lines.append("end")
    header = ("\n".join(lines) + "\n").encode("ascii")
    payload = b"".join(np.ascontiguousarray(p, dtype=_LE).tobytes() for p in net.params)
    return header + payload


def save_model(path, net, meta: dict | None = None) -> None:
    atomic_write(path, dumps_model(net, meta))


def loads_model(blob: bytes):
    """Parse a model blob; returns ``(net, meta)``."""
    first, _, _ = blob.partition(b"\n")
    if first.decode("ascii", "replace").strip() != MAGIC:
        raise DataError(f"unsupported model header {first[:40]!r}; expected {MAGIC!r}")
    end = blob.find(b"\nend\n")
    if end < 0:
        raise DataError("model descriptor is not terminated by an 'end' line")
    header = blob[: end + 1].decode("ascii").splitlines()[1:]
    payload = blob[end + 5 :]

    meta, gru, dense = {}, None, []
    for n, line in enumerate(header, start=2):
        parts = line.split()
        try:
            if parts[0] == "meta":
                k, _, v = line[5:].partition("=")
                meta[k] = v
            elif parts[0] == "gru" and not dense and gru is None and len(parts) == 3:
                gru = (int(parts[1]), int(parts[2]))
            elif parts[0] == "dense" and len(parts) == 4:
                dense.append((int(parts[1]), int(parts[2]), parts[3]))
            else:
                raise ValueError
        except (ValueError, IndexError):
            raise DataError(f"line {n}: cannot parse descriptor entry {line!r}") from None
    if not dense:
        raise DataError("descriptor has no dense layers")
    prev = gru[1] if gru else dense[0][0]
    for i, (fan_in, _, _) in enumerate(dense):
        if fan_in != prev:
            raise DataError(f"dense layer {i} takes {fan_in} inputs but receives {prev}")
        prev = dense[i][1]

    shapes = []
    if gru:
        I, H = gru
        shapes += [(H, I), (H, H), (H,)] * 3
    for fan_in, fan_out, _ in dense:
        shapes += [(fan_out, fan_in), (fan_out,)]
    want = sum(int(np.prod(s)) for s in shapes) * 8
    if len(payload) != want:
        raise DataError(
            f"payload holds {len(payload)} bytes but the descriptor requires {want}"
        )
    flat = np.frombuffer(payload, dtype=_LE).astype(np.float64)
    tensors, pos = [], 0
    for s in shapes:
        n = int(np.prod(s))
        tensors.append(flat[pos : pos + n].reshape(s).copy())
        pos += n
    acts = [a for _, _, a in dense]
    if gru:
        head = MlpNetwork(tensors[9::2], tensors[10::2], acts)
        return RecurrentQNetwork(GruCell(tensors[:9]), head), meta
    return MlpNetwork(tensors[0::2], tensors[1::2], acts), meta


def load_model(path):
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror}") from exc
    try:
        return loads_model(blob)
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from None

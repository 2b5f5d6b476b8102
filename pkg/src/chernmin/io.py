"""Binary plane dumps and key-value report files.

Plane files (checkpoints and field dumps) are::

    b"CMF1"                      magic
    uint32 n1, n2, nplanes       little-endian
    float64[nplanes, n1, n2]     little-endian, C order

Report files are UTF-8 text, one ``key = value`` per line, with ``#``
comments and ``[section]`` headers; values are JSON literals so that the
file round-trips exactly.
"""

import json
import struct

import numpy as np

from .errors import ConfigError, MissingDump

MAGIC = b"CMF1"
_HEADER = struct.Struct("<4sIII")


def write_planes(path, planes):
    planes = np.ascontiguousarray(planes, dtype="<f8")
    if planes.ndim != 3:
        raise ValueError("planes must have shape (nplanes, n1, n2)")
    k, n1, n2 = planes.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, n1, n2, k))
        fh.write(planes.tobytes(order="C"))


def read_planes(path):
    try:
        with open(path, "rb") as fh:
            head = fh.read(_HEADER.size)
            if len(head) < _HEADER.size:
                raise MissingDump(f"{path}: truncated header", context="io.read_planes")
            magic, n1, n2, k = _HEADER.unpack(head)
            if magic != MAGIC:
                raise MissingDump(f"{path}: not a plane dump", context="io.read_planes")
            data = np.frombuffer(fh.read(), dtype="<f8")
    except FileNotFoundError:
        raise MissingDump(f"{path}: no such dump", context="io.read_planes") from None
    if data.size != k * n1 * n2:
        raise MissingDump(f"{path}: expected {k * n1 * n2} values, found {data.size}",
                          context="io.read_planes")
    return data.reshape(k, n1, n2).astype(float)


def complex_planes(z):
    """(C, n, n, m) complex -> (2 m C, n, n) real planes, chart-major."""
    z = np.asarray(z)
    C, n1, n2, m = z.shape
    out = np.empty((C, m, 2, n1, n2))
    for k in range(m):
        out[:, k, 0] = z[..., k].real
        out[:, k, 1] = z[..., k].imag
    return out.reshape(C * m * 2, n1, n2)


def planes_complex(planes, charts, m=2):
    p = np.asarray(planes).reshape(charts, m, 2, *np.shape(planes)[1:])
    return np.moveaxis(p[:, :, 0] + 1j * p[:, :, 1], 1, -1)


# ---------------------------------------------------------------------------
# key-value reports

def _jsonable(v):
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def format_report(sections, header=None):
    """Render ``{section: {key: value}}`` deterministically."""
    lines = []
    if header:
        lines += [f"# {h}" for h in header]
    for name, body in sections.items():
        lines.append(f"[{name}]")
        for k, v in body.items():
            lines.append(f"{k} = {json.dumps(_jsonable(v), sort_keys=True)}")
        lines.append("")
    return "\n".join(lines)


def write_report(path, sections, header=None):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_report(sections, header))


def parse_report(text):
    out, cur = {}, None
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            cur = out.setdefault(line[1:-1], {})
            continue
        if "=" not in line or cur is None:
            raise ConfigError(f"malformed report line: {raw!r}", context="io.parse_report")
        k, v = line.split("=", 1)
        cur[k.strip()] = json.loads(v.strip())
    return out


def read_report(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_report(fh.read())
    except FileNotFoundError:
        raise MissingDump(f"{path}: no such report", context="io.read_report") from None

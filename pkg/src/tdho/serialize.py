"""Deterministic text serialization for CLI artifacts.

All floats are printed with 17 significant digits so that output files are
byte-identical across runs and round-trip exactly to the same double.
"""

import io


def fmt_float(x) -> str:
    return format(float(x), ".17g")


def _json_value(obj, indent, level):
    pad = " " * (indent * (level + 1))
    closing = " " * (indent * level)
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return fmt_float(obj)
    if isinstance(obj, str):
        # JSON string escaping for the small character set we emit
        out = obj.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
        return f'"{out}"'
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = []
        for key in sorted(obj):
            if not isinstance(key, str):
                raise TypeError(f"JSON keys must be strings, got {key!r}")
            items.append(f'{pad}"{key}": {_json_value(obj[key], indent, level + 1)}')
        return "{\n" + ",\n".join(items) + "\n" + closing + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad}{_json_value(v, indent, level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + closing + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_json(obj, indent: int = 2) -> str:
    """Serialize dicts/lists/scalars to sorted-key JSON with 17g floats."""
    return _json_value(obj, indent, 0) + "\n"


def format_csv(header, rows, meta=None) -> str:
    """Render a CSV table with optional '# key = value' metadata lines."""
    buf = io.StringIO()
    if meta:
        for key in sorted(meta):
            buf.write(f"# {key} = {_meta_value(meta[key])}\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_cell(v) for v in row) + "\n")
    return buf.getvalue()


def _cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return fmt_float(v)
    return str(v)


def _meta_value(v) -> str:
    if isinstance(v, float):
        return fmt_float(v)
    return str(v)


def write_text(path, text):
    """Write text to a path, or to a file-like object if one is given."""
    if hasattr(path, "write"):
        path.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)

"""CSV output for sweep records."""

import csv

from ..errors import ContractViolation

HEADER = ["sweep_param", "sweep_value", "scheme", "seed", "status", "r_u_sum", "r_m_min",
          "mismatch_ratio", "inner_iters", "outer_iters", "wall_ms"]


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def emit_csv(records, path, timing=False):
    """Write one row per record. ``wall_ms`` stays blank unless ``timing``,
    which keeps repeated runs byte-identical."""
    if not records:
        raise ContractViolation("no records to write")
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(HEADER)
            for r in records:
                w.writerow([
                    r.sweep_param, _fmt(float(r.sweep_value)), r.scheme, r.seed, r.status,
                    _fmt(r.r_u_sum), _fmt(r.r_m_min), _fmt(r.mismatch_ratio),
                    _fmt(r.inner_iters), _fmt(r.outer_iters),
                    _fmt(r.wall_ms) if timing else "",
                ])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc


def read_csv(path):
    """Rows of an emitted file as dicts of strings."""
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))

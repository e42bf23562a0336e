"""Dynamics CSV persistence with a frozen schema.

Header order is part of the file contract; floats are serialized with 17
significant digits so files round-trip bit-exactly and identical runs
produce byte-identical output.
"""

from __future__ import annotations

from pathlib import Path

from .errors import InvalidInputError
from .training import DynamicsRecord

DYNAMICS_HEADER = (
    "step",
    "loss",
    "grad_norm_param",
    "grad_sampled_logit",
    "grad_nonsampled_logit",
    "entropy",
    "sampled_prob",
    "adv_bucket",
    "bound",
)


def format_float(value: float) -> str:
    return f"{value:.17g}"


def dynamics_rows(records) -> list[str]:
    lines = [",".join(DYNAMICS_HEADER)]
    for r in records:
        lines.append(
            ",".join(
                (
                    str(r.step),
                    format_float(r.loss),
                    format_float(r.grad_norm_param),
                    format_float(r.grad_sampled_logit),
                    format_float(r.grad_nonsampled_logit),
                    format_float(r.entropy),
                    format_float(r.sampled_prob),
                    r.advantage_sign_bucket,
                    "" if r.bound_value is None else format_float(r.bound_value),
                )
            )
        )
    return lines


def write_dynamics_csv(path: str | Path, records: list[DynamicsRecord]) -> None:
    Path(path).write_text("\n".join(dynamics_rows(records)) + "\n")


def read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    """Header and raw string rows of a comma-separated file."""
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise InvalidInputError(f"{path}: empty file")
    header = lines[0].split(",")
    return header, [line.split(",") for line in lines[1:] if line]


def numeric_column(header: list[str], rows: list[list[str]], name: str) -> list[float]:
    if name not in header:
        raise InvalidInputError(f"missing column {name!r}")
    idx = header.index(name)
    out = []
    for row in rows:
        cell = row[idx] if idx < len(row) else ""
        out.append(float(cell) if cell else float("nan"))
    return out

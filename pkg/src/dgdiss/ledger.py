"""Energy-ledger CSV files: '#'-prefixed JSON metadata, then plain CSV.

One row per time step, comma separated, newline "\\n", every value printed
with 17 significant digits so identity checks can be re-run from the file
without precision loss.  Identical config + seed + code version produces a
byte-identical file.
"""

from __future__ import annotations

import json

import numpy as np

__all__ = ["LEDGER_COLUMNS", "write_ledger", "read_ledger", "LedgerParseError"]

LEDGER_COLUMNS = (
    "t",
    "kinetic_energy",
    "dKdt",
    "a_total",
    "a_phy_sigma",
    "a_num_sigma",
    "a_phy_broken",
    "a_num_broken",
    "convective_rate",
    "eps_tot",
)

_SAMPLE_FIELDS = (
    "t",
    "kinetic_energy",
    "dKdt_discrete",
    "a_total",
    "a_phy_sigma",
    "a_num_sigma",
    "a_phy_broken",
    "a_num_broken",
    "convective_rate",
    "eps_tot",
)


class LedgerParseError(ValueError):
    pass


def write_ledger(path, samples, metadata: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("#" + json.dumps(metadata, sort_keys=True) + "\n")
        f.write(",".join(LEDGER_COLUMNS) + "\n")
        for sample in samples:
            values = [getattr(sample, name) for name in _SAMPLE_FIELDS]
            f.write(",".join(f"{v:.16e}" for v in values) + "\n")


def read_ledger(path):
    """Parse a ledger file into (metadata, dict of column arrays)."""
    with open(path, "r", encoding="utf-8") as f:
        first = f.readline()
        if not first.startswith("#"):
            raise LedgerParseError(f"{path}: line 1: expected '#'-prefixed JSON metadata")
        try:
            metadata = json.loads(first[1:])
        except json.JSONDecodeError as e:
            raise LedgerParseError(f"{path}: line 1: invalid JSON metadata ({e})") from e
        header = f.readline().rstrip("\n")
        if tuple(header.split(",")) != LEDGER_COLUMNS:
            raise LedgerParseError(
                f"{path}: line 2: header {header!r} does not match the ledger schema"
            )
        rows = []
        for lineno, line in enumerate(f, start=3):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(LEDGER_COLUMNS):
                raise LedgerParseError(
                    f"{path}: line {lineno}: expected {len(LEDGER_COLUMNS)} values, "
                    f"got {len(parts)}"
                )
            try:
                rows.append([float(p) for p in parts])
            except ValueError as e:
                raise LedgerParseError(f"{path}: line {lineno}: {e}") from e
    data = np.asarray(rows, dtype=float).reshape(len(rows), len(LEDGER_COLUMNS))
    columns = {name: data[:, i] for i, name in enumerate(LEDGER_COLUMNS)}
    return metadata, columns

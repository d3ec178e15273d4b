"""Independent reader and validator for the energy-ledger CSV contract.

Expected layout: line 1 is '#' followed by a JSON object carrying at least
`config` (with problem, mesh and order), `lambda` and `lambda_star`; line 2
is the fixed column header; every further line is one comma-separated row of
floats.  The validator re-checks the row identities from the file values at
file precision.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "COLUMNS",
    "Ledger",
    "LedgerFormatError",
    "ValidationReport",
    "read_ledger",
    "validate_ledger",
]

COLUMNS = (
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


class LedgerFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Ledger:
    path: str
    metadata: dict
    columns: dict

    @property
    def n_rows(self) -> int:
        return len(self.columns["t"])

    @property
    def nu(self) -> float:
        return float(self.metadata["config"]["nu"])

    @property
    def lam(self) -> float:
        return float(self.metadata["lambda"])

    @property
    def lambda_star(self) -> float:
        return float(self.metadata["lambda_star"])

    def scenario_identity(self) -> tuple:
        cfg = self.metadata.get("config", {})
        return (
            cfg.get("problem"),
            tuple(cfg.get("cells_per_axis", ())),
            tuple(cfg.get("box_length", ())),
            cfg.get("order"),
            cfg.get("nu"),
        )


def read_ledger(path) -> Ledger:
    path = str(path)
    with open(path, "r", encoding="utf-8") as f:
        first = f.readline()
        if not first.startswith("#"):
            raise LedgerFormatError(f"{path}: line 1: expected '#'-prefixed JSON metadata")
        try:
            metadata = json.loads(first[1:])
        except json.JSONDecodeError as e:
            raise LedgerFormatError(f"{path}: line 1: metadata is not valid JSON ({e})") from e
        header = f.readline().rstrip("\n")
        if tuple(header.split(",")) != COLUMNS:
            raise LedgerFormatError(f"{path}: line 2: header does not match the ledger schema")
        rows = []
        for lineno, line in enumerate(f, start=3):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(COLUMNS):
                raise LedgerFormatError(
                    f"{path}: line {lineno}: expected {len(COLUMNS)} values, got {len(parts)}"
                )
            try:
                rows.append([float(p) for p in parts])
            except ValueError as e:
                raise LedgerFormatError(f"{path}: line {lineno}: {e}") from e
    if not rows:
        raise LedgerFormatError(f"{path}: ledger has no data rows")
    data = np.asarray(rows)
    columns = {name: data[:, i] for i, name in enumerate(COLUMNS)}
    return Ledger(path, metadata, columns)


@dataclass
class ValidationReport:
    path: str
    n_rows: int = 0
    errors: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def summary(self) -> str:
        if self.ok:
            return f"OK, {self.n_rows} rows"
        lines = [f"{self.path}: {len(self.errors)} problem(s)"]
        lines.extend(f"  {msg}" for msg in self.errors)
        return "\n".join(lines)


def validate_ledger(path, tol: float = 1e-8) -> ValidationReport:
    """Re-check the row identities from file values at file precision.

    Checks: strictly increasing time column, eps_tot = -dKdt - nu*a_phy_sigma,
    and both decomposition splits summing to a_total.
    """
    report = ValidationReport(path=str(path))
    ledger = read_ledger(path)  # format problems raise with a line number
    report.n_rows = ledger.n_rows
    cols = ledger.columns
    nu = ledger.nu
    t = cols["t"]
    if not np.all(np.diff(t) > 0):
        bad = int(np.argmin(np.diff(t) > 0))
        report.errors.append(f"row {bad + 1}: time column not strictly increasing")
    for i in range(ledger.n_rows):
        scale = max(
            1.0,
            abs(cols["dKdt"][i]),
            nu * abs(cols["a_total"][i]),
            nu * (abs(cols["a_phy_sigma"][i]) + abs(cols["a_num_sigma"][i])),
        )
        resid = cols["eps_tot"][i] + cols["dKdt"][i] + nu * cols["a_phy_sigma"][i]
        if abs(resid) > tol * scale:
            report.errors.append(
                f"row {i}: eps_tot identity violated (residual {resid:.3e})"
            )
        form_scale = max(1.0, abs(cols["a_total"][i]))
        for phy, num, label in (
            ("a_phy_sigma", "a_num_sigma", "sigma"),
            ("a_phy_broken", "a_num_broken", "broken"),
        ):
            resid = cols[phy][i] + cols[num][i] - cols["a_total"][i]
            if abs(resid) > tol * form_scale:
                report.errors.append(
                    f"row {i}: {label} split does not sum to a_total (residual {resid:.3e})"
                )
    return report

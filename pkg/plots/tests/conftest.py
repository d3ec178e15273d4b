import json
from pathlib import Path

import pytest

REPO = Path(__file__).resolve().parents[2]
LEDGER_DIR = REPO / "demo" / "ledgers"

BURGERS_LEDGERS = [
    LEDGER_DIR / f"burgers_lambda{tag}.csv" for tag in ("100", "125", "150", "200")
]
HEAT_LEDGER = LEDGER_DIR / "heat_demo.csv"


@pytest.fixture(scope="session")
def burgers_ledgers():
    missing = [p for p in BURGERS_LEDGERS if not p.exists()]
    if missing:
        pytest.fail(
            f"shipped ledgers missing: {missing}; regenerate with "
            "`dgdiss run --config demo/configs/<name>.json`"
        )
    return [str(p) for p in BURGERS_LEDGERS]


@pytest.fixture(scope="session")
def heat_ledger():
    if not HEAT_LEDGER.exists():
        pytest.fail(f"shipped ledger missing: {HEAT_LEDGER}")
    return str(HEAT_LEDGER)


def make_synthetic_ledger(path, nu=0.5, rows=4, corrupt_row=None, truncate=False):
    """Small hand-built ledger whose rows satisfy the file identities."""
    metadata = {
        "config": {
            "problem": "heat",
            "cells_per_axis": [4],
            "box_length": [1.0],
            "order": 1,
            "nu": nu,
        },
        "lambda": 1.5,
        "lambda_star": 1.0,
        "seed": 0,
        "version": "test",
    }
    header = (
        "t,kinetic_energy,dKdt,a_total,a_phy_sigma,a_num_sigma,"
        "a_phy_broken,a_num_broken,convective_rate,eps_tot"
    )
    lines = ["#" + json.dumps(metadata, sort_keys=True), header]
    for i in range(rows):
        t = 0.1 * (i + 1)
        a_phy_sigma, a_num_sigma = 0.6, 0.4
        a_total = a_phy_sigma + a_num_sigma
        a_phy_broken = 0.9
        a_num_broken = a_total - a_phy_broken
        dkdt = -nu * a_total
        eps = -dkdt - nu * a_phy_sigma
        values = [t, 1.0 / (i + 1), dkdt, a_total, a_phy_sigma, a_num_sigma,
                  a_phy_broken, a_num_broken, 0.0, eps]
        if corrupt_row == i:
            values[9] += 1.0  # break the eps_tot identity
        lines.append(",".join(f"{v:.16e}" for v in values))
    text = "\n".join(lines) + "\n"
    if truncate:
        text = text[: text.rfind(",") - 2]  # chop inside the final row
    Path(path).write_text(text)
    return path

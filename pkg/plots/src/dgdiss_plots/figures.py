"""Figure rendering: energy, dissipation rate, and the two splits side by side.

One curve per input ledger (one ledger per penalty value), legend labels
carrying lambda/lambda* from the metadata.  Decomposition panels draw a zero
reference line.  The style is pinned and output files carry no timestamps,
so identical inputs render byte-identical images.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .ledger import Ledger, read_ledger

__all__ = ["PANELS", "PlotSpec", "render"]

PANELS = ("energy", "total_rate", "decomposition_broken", "decomposition_sigma")

_STYLE = {
    "figure.figsize": (6.4, 4.0),
    "figure.dpi": 100,
    "savefig.dpi": 150,
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.4,
    "legend.framealpha": 0.9,
    "svg.hashsalt": "dgdiss-plots",
}

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")


@dataclass(frozen=True)
class PlotSpec:
    """What to render: ledgers (one per penalty), panels, output image path."""

    inputs: tuple
    output: str
    panels: tuple = PANELS
    image_format: str = None  # inferred from the output suffix when None
    x_range: tuple = None
    y_range: tuple = None

    @classmethod
    def from_dict(cls, raw: dict) -> "PlotSpec":
        known = {"inputs", "output", "panels", "image_format", "x_range", "y_range"}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ValueError(f"plot spec has unknown keys: {unknown}")
        for key in ("inputs", "output"):
            if key not in raw:
                raise ValueError(f"plot spec is missing {key!r}")
        panels = raw.get("panels", "all")
        return cls(
            inputs=tuple(str(p) for p in raw["inputs"]),
            output=str(raw["output"]),
            panels=normalize_panels(panels),
            image_format=raw.get("image_format"),
            x_range=tuple(raw["x_range"]) if raw.get("x_range") else None,
            y_range=tuple(raw["y_range"]) if raw.get("y_range") else None,
        )


def normalize_panels(selection) -> tuple:
    if selection in ("all", None):
        return PANELS
    if isinstance(selection, str):
        selection = [selection]
    panels = tuple(selection)
    bad = sorted(set(panels) - set(PANELS))
    if bad:
        raise ValueError(f"unknown panels {bad}; choose from {PANELS} or 'all'")
    return panels


def _check_shared_identity(ledgers) -> None:
    first = ledgers[0].scenario_identity()
    for ledger in ledgers[1:]:
        if ledger.scenario_identity() != first:
            raise ValueError(
                "input ledgers describe different scenarios: "
                f"{ledgers[0].path} has {first}, {ledger.path} has "
                f"{ledger.scenario_identity()}"
            )


def _label(ledger: Ledger) -> str:
    ratio = ledger.lam / ledger.lambda_star
    return f"$\\lambda/\\lambda^*$ = {ratio:g}"


def _panel_series(panel: str, ledger: Ledger):
    """Curves of one panel: list of (values, label suffix, linestyle)."""
    cols = ledger.columns
    nu = ledger.nu
    if panel == "energy":
        return [(cols["kinetic_energy"], "", "-")]
    if panel == "total_rate":
        return [(-cols["dKdt"], "", "-")]
    if panel == "decomposition_broken":
        return [
            (nu * cols["a_phy_broken"], " physical (broken)", "-"),
            (nu * cols["a_num_broken"], " numerical (broken)", "--"),
        ]
    if panel == "decomposition_sigma":
        return [
            (nu * cols["a_phy_sigma"], " physical (flux)", "-"),
            (nu * cols["a_num_sigma"], " numerical (flux)", "--"),
        ]
    raise ValueError(f"unknown panel {panel!r}")


_PANEL_TITLES = {
    "energy": ("kinetic energy", "$K(u_h)$"),
    "total_rate": ("kinetic energy dissipation rate", "$-dK/dt$"),
    "decomposition_broken": ("viscous dissipation, broken-gradient split", "rate"),
    "decomposition_sigma": ("viscous dissipation, reconstructed-flux split", "rate"),
}


def _output_path(spec: PlotSpec, panel: str) -> Path:
    out = Path(spec.output)
    fmt = spec.image_format or (out.suffix.lstrip(".") or "png")
    if fmt.lower() not in ("png", "svg"):
        raise ValueError(f"image format must be png or svg, got {fmt!r}")
    if len(spec.panels) == 1:
        return out if out.suffix else out.with_suffix(f".{fmt}")
    stem = out.stem if out.suffix else out.name
    return out.with_name(f"{stem}.{panel}.{fmt}")


def _save(fig, path: Path) -> None:
    fmt = path.suffix.lstrip(".").lower()
    metadata = {"Software": None} if fmt == "png" else {"Date": None}
    fig.savefig(path, format=fmt, metadata=metadata)


def render(spec: PlotSpec) -> dict:
    """Render every requested panel; returns output paths and data extrema.

    The extrema let callers assert the headline behavior (a broken-split
    curve crossing zero, the flux split staying non-negative) without
    rasterizing anything twice.
    """
    if not spec.inputs:
        raise ValueError("plot spec has no input ledgers")
    ledgers = [read_ledger(p) for p in spec.inputs]
    _check_shared_identity(ledgers)
    report = {"outputs": [], "panel_min": {}, "panel_max": {}}
    with plt.rc_context(_STYLE):
        for panel in spec.panels:
            fig, ax = plt.subplots()
            lo, hi = float("inf"), float("-inf")
            for i, ledger in enumerate(ledgers):
                color = _COLORS[i % len(_COLORS)]
                for values, suffix, style in _panel_series(panel, ledger):
                    ax.plot(
                        ledger.columns["t"],
                        values,
                        style,
                        color=color,
                        label=_label(ledger) + suffix,
                    )
                    lo = min(lo, float(values.min()))
                    hi = max(hi, float(values.max()))
            if panel.startswith("decomposition"):
                ax.axhline(0.0, color="black", linewidth=0.8)
            title, ylabel = _PANEL_TITLES[panel]
            ax.set_title(title)
            ax.set_xlabel("t")
            ax.set_ylabel(ylabel)
            if spec.x_range:
                ax.set_xlim(spec.x_range)
            if spec.y_range:
                ax.set_ylim(spec.y_range)
            ax.legend(loc="best", fontsize=8)
            out = _output_path(spec, panel)
            out.parent.mkdir(parents=True, exist_ok=True)
            _save(fig, out)
            plt.close(fig)
            report["outputs"].append(str(out))
            report["panel_min"][panel] = lo
            report["panel_max"][panel] = hi
    return report

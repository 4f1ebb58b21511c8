"""Closed-form throughput and labour-cost calculators, plus the comparison
report that lines them up against simulated totals.

All formulas are plain arithmetic over whatever numeric type is passed in;
Fractions stay exact, floats stay floats. Hours in reports are rounded to
one decimal for presentation, with raw seconds always alongside.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from trayport.farm import DEFAULT_AREA_PER_UNIT, FarmSpec, grow_area

# Default per-unit times for the automated system derive from the default
# pitches and rated speeds (1250 mm at 100 mm/s, 500 mm at 33.3 mm/s).
DEFAULT_T_H_M = 12.5
DEFAULT_T_V_M = 500 / 33.3

# Scissor-lift and manual-handling baseline times for the human comparison.
DEFAULT_T_H_S = 10.0
DEFAULT_T_V_S = 6.0
DEFAULT_T_M = 15.0

SAVINGS_FORMULA = "labour_cost * tray_labour_fraction * labour_cost_share"


@dataclass(frozen=True)
class TimingParams:
    """Per-unit operation times, seconds."""

    t_h_m: float = DEFAULT_T_H_M   # automated, one horizontal unit
    t_v_m: float = DEFAULT_T_V_M   # automated, one vertical unit
    t_h_s: Optional[float] = DEFAULT_T_H_S  # scissor lift, horizontal
    t_v_s: Optional[float] = DEFAULT_T_V_S  # scissor lift, vertical
    t_m: Optional[float] = DEFAULT_T_M      # manual tray lift

    def __post_init__(self):
        for name in ("t_h_m", "t_v_m"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        for name in ("t_h_s", "t_v_s", "t_m"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ValueError(f"{name} must be > 0 when set")

    @property
    def has_human_baseline(self) -> bool:
        return None not in (self.t_h_s, self.t_v_s, self.t_m)


@dataclass(frozen=True)
class CostModel:
    """Labour-cost parameters for the savings estimate.

    ``headline_savings_estimate`` is an optional externally published
    figure; when set, the report shows the deviation of the computed
    product from it instead of silently adopting either number.
    """

    grow_area: float
    labour_rate: float = 222.18          # USD per m^2 per year
    tray_labour_fraction: float = 0.15   # share of labour spent moving trays
    labour_cost_share: float = 0.56      # share of operating cost that is labour
    headline_savings_estimate: Optional[float] = 4110.0

    def __post_init__(self):
        if not self.grow_area > 0:
            raise ValueError("grow_area must be > 0")
        if not self.labour_rate > 0:
            raise ValueError("labour_rate must be > 0")
        for name in ("tray_labour_fraction", "labour_cost_share"):
            value = getattr(self, name)
            if not 0 < value <= 1:
                raise ValueError(f"{name} must be in (0, 1]")


def closed_form_t_module(n_h: int, n_v: int, t_h_m, t_v_m):
    """Total sequential unload time of one n_h x n_v module, seconds.

    Exact sum of per-carriage round trips: the carriage in column c and row
    r costs 2(c+1) horizontal and 2(r+1) vertical unit moves, which sums to
    n_h*n_v*((n_h+1)*t_h + (n_v+1)*t_v).
    """
    if n_h < 1 or n_v < 1:
        raise ValueError("n_h and n_v must be >= 1")
    if not (t_h_m > 0 and t_v_m > 0):
        raise ValueError("unit times must be > 0")
    return n_h * n_v * ((n_h + 1) * t_h_m + (n_v + 1) * t_v_m)


def closed_form_t_human(n_h: int, n_v: int, n_modules: int, params: TimingParams):
    """Total unload time for one operator with a scissor lift, seconds.

    Per module: every tray costs two vertical lift moves and one manual
    lift, plus n_h*(n_h+1) horizontal lift moves to walk the columns;
    modules are worked one after another.
    """
    if min(n_h, n_v, n_modules) < 1:
        raise ValueError("counts must be >= 1")
    if not params.has_human_baseline:
        raise ValueError("scissor-lift timings are not set")
    per_module = (
        2 * n_v * n_h * params.t_v_s
        + n_v * n_h * params.t_m
        + n_h * (n_h + 1) * params.t_h_s
    )
    return per_module * n_modules


def labour_cost(model: CostModel):
    """Annual labour cost attributable to the grow area, USD/year."""
    return model.grow_area * model.labour_rate


def tray_labour_savings(model: CostModel):
    """Annual labour saving from automating tray transport, USD/year.

    Computed as labour_cost * tray_labour_fraction * labour_cost_share;
    the composition is printed in reports so the inputs stay auditable.
    """
    return labour_cost(model) * model.tray_labour_fraction * model.labour_cost_share


def farm_unload_seconds(
    farm: FarmSpec, params: TimingParams, modules_mode: str = "parallel"
):
    """Closed-form unload total for a whole farm.

    Parallel mode assumes one mover and elevator per module working
    simultaneously (total = slowest module); serial mode sums them.
    """
    per_module = [
        closed_form_t_module(m.n_h, m.n_v, params.t_h_m, params.t_v_m)
        for m in farm.modules
    ]
    if modules_mode == "parallel":
        return max(per_module)
    if modules_mode == "serial":
        return sum(per_module)
    raise ValueError("modules_mode must be parallel|serial")


def hours(seconds) -> float:
    return float(seconds) / 3600.0


def hours_rounded(seconds) -> float:
    return round(hours(seconds), 1)


def comparison_report(
    farm: FarmSpec,
    params: TimingParams,
    cost: CostModel | None = None,
    simulated_seconds=None,
    modules_mode: str = "parallel",
) -> dict:
    """Build the machine-readable comparison document.

    Deterministic for fixed inputs: serializing the returned dict with
    :func:`render_records` twice gives identical bytes.
    """
    t_module = farm_unload_seconds(farm, params, modules_mode)
    shape = [(m.n_h, m.n_v) for m in farm.modules]
    report: dict = {
        "farm": {
            "modules": len(shape),
            "capacity": farm.capacity,
            "shapes": [f"{h}x{v}" for h, v in shape],
            "modules_mode": modules_mode,
        },
        "timings": {
            "t_h_m_s": params.t_h_m,
            "t_v_m_s": params.t_v_m,
            "t_h_s_s": params.t_h_s,
            "t_v_s_s": params.t_v_s,
            "t_m_s": params.t_m,
        },
        "automated_unload": {
            "seconds": float(t_module),
            "hours": hours(t_module),
            "hours_1dp": hours_rounded(t_module),
        },
    }
    if params.has_human_baseline:
        # The baseline formula needs a uniform grid; report per first shape.
        n_h, n_v = shape[0]
        uniform = all(s == shape[0] for s in shape)
        if uniform:
            t_human = closed_form_t_human(n_h, n_v, farm.n, params)
            report["human_unload"] = {
                "seconds": float(t_human),
                "hours": hours(t_human),
                "hours_1dp": hours_rounded(t_human),
                "speedup_vs_automated": float(t_human) / float(t_module),
            }
    if simulated_seconds is not None:
        sim = float(simulated_seconds)
        closed = float(t_module)
        report["simulated_unload"] = {
            "seconds": sim,
            "hours": hours(sim),
            "hours_1dp": hours_rounded(sim),
            "closed_form_delta_s": sim - closed,
            "closed_form_delta_pct": (
                100.0 * (sim - closed) / closed if closed else 0.0
            ),
        }
    if cost is not None:
        lc = labour_cost(cost)
        savings = tray_labour_savings(cost)
        cost_block: dict = {
            "grow_area_m2": cost.grow_area,
            "labour_rate_usd_m2_yr": cost.labour_rate,
            "labour_cost_usd_yr": round(float(lc), 2),
            "tray_labour_fraction": cost.tray_labour_fraction,
            "labour_cost_share": cost.labour_cost_share,
            "savings_formula": SAVINGS_FORMULA,
            "tray_labour_savings_usd_yr": round(float(savings), 2),
        }
        if cost.headline_savings_estimate is not None:
            headline = cost.headline_savings_estimate
            cost_block["headline_savings_estimate_usd_yr"] = headline
            cost_block["headline_deviation_pct"] = round(
                100.0 * (headline - float(savings)) / headline, 2
            )
            cost_block["note"] = (
                "computed product differs from the headline estimate; "
                "the formula above is authoritative for this report"
            )
        report["labour"] = cost_block
    return report


def render_records(report: dict) -> str:
    """Canonical JSON rendering (byte-stable for fixed inputs)."""
    return json.dumps(report, sort_keys=True, separators=(",", ":")) + "\n"


def render_table(report: dict) -> str:
    """Human-readable rendering (byte-stable for fixed inputs)."""
    lines = []
    farm = report["farm"]
    lines.append("tray transport comparison")
    lines.append("=" * 54)
    lines.append(
        f"farm: {farm['modules']} module(s) "
        f"[{', '.join(farm['shapes'])}], {farm['capacity']} grow units, "
        f"{farm['modules_mode']} modules"
    )
    auto = report["automated_unload"]
    lines.append("")
    lines.append(f"{'automated unload':28s} {auto['seconds']:12.1f} s "
                 f"= {auto['hours_1dp']:.1f} h")
    if "simulated_unload" in report:
        sim = report["simulated_unload"]
        lines.append(
            f"{'simulated unload':28s} {sim['seconds']:12.1f} s "
            f"= {sim['hours_1dp']:.1f} h "
            f"(vs closed form {sim['closed_form_delta_pct']:+.3f}%)"
        )
    if "human_unload" in report:
        human = report["human_unload"]
        lines.append(
            f"{'human unload (scissor lift)':28s} {human['seconds']:12.1f} s "
            f"= {human['hours_1dp']:.1f} h"
        )
    if "labour" in report:
        lab = report["labour"]
        lines.append("")
        lines.append(
            f"{'labour cost':28s} {lab['labour_cost_usd_yr']:12.2f} USD/yr "
            f"({lab['grow_area_m2']} m2 x {lab['labour_rate_usd_m2_yr']} USD/m2/yr)"
        )
        lines.append(
            f"{'tray-transport savings':28s} "
            f"{lab['tray_labour_savings_usd_yr']:12.2f} USD/yr "
            f"[{lab['savings_formula']}]"
        )
        if "headline_savings_estimate_usd_yr" in lab:
            lines.append(
                f"{'  headline estimate':28s} "
                f"{lab['headline_savings_estimate_usd_yr']:12.2f} USD/yr "
                f"(computed differs by {lab['headline_deviation_pct']:.2f}%)"
            )
    lines.append("")
    return "\n".join(lines)


def default_cost_model(
    farm: FarmSpec, area_per_unit: float = DEFAULT_AREA_PER_UNIT
) -> CostModel:
    return CostModel(grow_area=grow_area(farm, area_per_unit))

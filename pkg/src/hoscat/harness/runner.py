"""Executing scenarios and writing their outputs."""

from __future__ import annotations

import time
import traceback
from pathlib import Path

from ..errors import ConfigError, HoscatError
from .config import ScenarioConfig, resolve
from .results import Context, RunSummary
from .scenarios import REGISTRY


def make_config(scenario: str, overrides: dict | None = None) -> ScenarioConfig:
    """Defaults of ``scenario`` updated with ``overrides``, validated."""
    if scenario not in REGISTRY:
        raise ConfigError(f"unknown scenario {scenario!r}; see `hoscat list`")
    raw = {"schema_version": 1, "scenario": scenario}
    raw.update(overrides or {})
    if raw["scenario"] != scenario:
        raise ConfigError(f"config names scenario {raw['scenario']!r}, expected {scenario!r}")
    return resolve(raw, REGISTRY[scenario].defaults)


def run_scenario(config: ScenarioConfig | dict | str, out_dir=None) -> RunSummary:
    """Run one scenario; errors inside the computation are recorded, not raised."""
    if isinstance(config, str):
        config = make_config(config)
    elif isinstance(config, dict):
        config = make_config(config.get("scenario", ""), config)
    sc = REGISTRY.get(config.scenario)
    if sc is None:
        raise ConfigError(f"unknown scenario {config.scenario!r}")
    out = out_dir if out_dir is not None else config.out_dir
    out_path = Path(out) if out is not None else None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)
    ctx = Context(config, out_path)
    start = time.perf_counter()
    error = None
    try:
        sc.run(config, ctx)
    except (HoscatError, ValueError, ArithmeticError) as exc:
        error = f"{type(exc).__name__}: {exc}"
        if not isinstance(exc, HoscatError):
            error += "\n" + traceback.format_exc(limit=3)
    summary = RunSummary(sc.name, sc.statement, ctx.criteria, ctx.numbers,
                         time.perf_counter() - start, config.raw, config.hash, ctx.artifacts, error)
    if out_path is not None:
        (out_path / "summary.json").write_text(summary.to_json() + "\n")
        summary.artifacts.append(str(out_path / "summary.json"))
        if config.plots:
            from .plot import plot_csv
            for name in list(ctx.tables):
                try:
                    summary.artifacts.append(str(plot_csv(out_path / f"{name}.csv")))
                except ValueError:
                    pass
    return summary

"""Command-line front end.

Usage::

    heralded-amp <command> --config run.json [--out path] [--format csv|dat]

Exit codes: 0 success, 1 runtime failure, 2 invalid config or arguments.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Optional, Sequence

from .amplifier import HERALD_RULES, T_MAX, AmplifierConfig, fringe_visibility, hom_coincidence, run_amplifier
from .errors import ConfigError, SimulationError
from .experiments import (
    FIBRE_DB_PER_KM,
    FIT_PARAMS,
    QUANTITIES,
    SweepRow,
    SweepSpec,
    default_grid,
    distance_to_loss,
    find_min_t,
    fit_model,
    loss_to_distance,
    sweep,
)
from .sources import DetectorModel, SourceModel

log = logging.getLogger("heralded_amp")

COMMANDS = ("gain-surface", "herald-curve", "visibility-surface", "fringe", "hom", "optimize-t", "fit", "validate")
CSV_HEADER = ("p", "t", "gain", "herald_probability", "herald_efficiency", "visibility", "distance_km")

DEFAULT_QUANTITIES = {
    "gain-surface": ("gain",),
    "herald-curve": ("herald_efficiency", "herald_probability"),
    "visibility-surface": ("visibility",),
    "optimize-t": ("gain", "herald_probability", "herald_efficiency"),
}

SCHEMA: dict[str, dict[str, type | tuple]] = {
    "source": {"p_pair": (int, float), "cutoff": int},
    "detector": {"efficiency": (int, float), "dark_prob": (int, float), "number_resolving": bool},
    "amplifier": {
        "t": (int, float),
        "t_grid": list,
        "intrinsic_loss": (int, float),
        "herald_rule": str,
        "cutoff": int,
    },
    "input": {
        "p": (int, float),
        "p_grid": list,
        "distance_km": (int, float, list),
        "attenuation_db_per_km": (int, float),
        "coherent": bool,
    },
    "experiment": {
        "kind": str,
        "quantities": list,
        "output": str,
        "phases": list,
        "overlap": (int, float),
        "target": (int, float),
        "data": str,
        "free_params": list,
        "bounds": dict,
    },
}


def fmt(x: Optional[float]) -> str:
    """Nine significant digits, trailing zeros kept."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return format(float(x), "#.9g")


@dataclass
class RunConfig:
    """Validated contents of a JSON run configuration."""

    base: AmplifierConfig
    p_values: list[float]
    t_values: list[float]
    attenuation: float = FIBRE_DB_PER_KM
    source: SourceModel = field(default_factory=SourceModel)
    kind: Optional[str] = None
    quantities: Optional[list[str]] = None
    output: Optional[str] = None
    phases: Optional[list[float]] = None
    overlap: float = 1.0
    target: Optional[float] = None
    data: Optional[str] = None
    free_params: list[str] = field(default_factory=list)
    bounds: dict[str, tuple[float, float]] = field(default_factory=dict)


def _check_types(doc: Any) -> None:
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    for section, body in doc.items():
        if section not in SCHEMA:
            raise ConfigError(section, "unknown section")
        if not isinstance(body, dict):
            raise ConfigError(section, "section must be an object")
        for key, value in body.items():
            if key not in SCHEMA[section]:
                raise ConfigError(f"{section}.{key}", "unknown key")
            expected = SCHEMA[section][key]
            ok = isinstance(value, expected) and not (isinstance(value, bool) and expected != bool)
            if not ok:
                raise ConfigError(f"{section}.{key}", f"wrong type {type(value).__name__}")


def _unit(value: Any, key: str, *, open_hi: bool = False, hi: float = 1.0) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(key, f"expected a number, got {value!r}")
    v = float(value)
    if v < 0 or v > hi or (open_hi and v >= hi):
        bracket = ")" if open_hi else "]"
        raise ConfigError(key, f"{v} outside [0, {hi}{bracket}")
    return v


def _number_list(values: list, key: str, **kw) -> list[float]:
    if not values:
        raise ConfigError(key, "must be a non-empty list")
    return [_unit(v, f"{key}[{i}]", **kw) for i, v in enumerate(values)]


def parse_config(doc: Any, command: str, cutoff_override: Optional[int] = None) -> RunConfig:
    """Validate a config document; every range is checked before any computation."""
    _check_types(doc)
    src = doc.get("source", {})
    det = doc.get("detector", {})
    amp = doc.get("amplifier", {})
    inp = doc.get("input", {})
    exp = doc.get("experiment", {})

    kind = exp.get("kind")
    if kind is not None and kind not in COMMANDS:
        raise ConfigError("experiment.kind", f"unknown kind {kind!r}")
    if kind is not None and command != "validate" and kind != command:
        raise ConfigError("experiment.kind", f"config is for {kind!r} but command is {command!r}")

    p_pair = _unit(src.get("p_pair", 0.0), "source.p_pair", open_hi=True)
    src_cutoff = src.get("cutoff", 2)
    if src_cutoff < 1:
        raise ConfigError("source.cutoff", "must be >= 1")
    detector = DetectorModel(
        efficiency=_unit(det.get("efficiency", 1.0), "detector.efficiency"),
        dark_prob=_unit(det.get("dark_prob", 0.0), "detector.dark_prob", open_hi=True),
        number_resolving=det.get("number_resolving", True),
    )

    if "t" in amp and "t_grid" in amp:
        raise ConfigError("amplifier.t_grid", "give either amplifier.t or amplifier.t_grid")
    if "t" in amp:
        t_values = [_unit(amp["t"], "amplifier.t", hi=T_MAX)]
    elif "t_grid" in amp:
        t_values = _number_list(amp["t_grid"], "amplifier.t_grid", hi=T_MAX)
    else:
        t_values = default_grid()

    attenuation = float(inp.get("attenuation_db_per_km", FIBRE_DB_PER_KM))
    if not attenuation > 0:
        raise ConfigError("input.attenuation_db_per_km", "must be positive")
    given = [k for k in ("p", "p_grid", "distance_km") if k in inp]
    if len(given) > 1:
        raise ConfigError(f"input.{given[1]}", "give only one of input.p, input.p_grid, input.distance_km")
    if "p" in inp:
        p_values = [_unit(inp["p"], "input.p")]
    elif "p_grid" in inp:
        p_values = _number_list(inp["p_grid"], "input.p_grid")
    elif "distance_km" in inp:
        kms = inp["distance_km"] if isinstance(inp["distance_km"], list) else [inp["distance_km"]]
        if not kms:
            raise ConfigError("input.distance_km", "must be non-empty")
        p_values = []
        for i, km in enumerate(kms):
            if isinstance(km, bool) or not isinstance(km, (int, float)) or km < 0 or not math.isfinite(km):
                raise ConfigError("input.distance_km", f"invalid distance {km!r}")
            p_values.append(distance_to_loss(float(km), attenuation))
    else:
        p_values = default_grid()

    cutoff = cutoff_override if cutoff_override is not None else amp.get("cutoff", 4)
    herald_rule = amp.get("herald_rule", "single_port_click")
    if herald_rule not in HERALD_RULES:
        raise ConfigError("amplifier.herald_rule", f"must be one of {HERALD_RULES}")
    coherent = inp.get("coherent", command in ("visibility-surface", "fringe"))
    try:
        base = AmplifierConfig(
            p=p_values[0],
            t=t_values[0],
            p_pair=p_pair,
            detector_b=detector,
            intrinsic_loss=_unit(amp.get("intrinsic_loss", 1.0), "amplifier.intrinsic_loss"),
            input_coherent=coherent,
            cutoff=cutoff,
            herald_rule=herald_rule,
            source_cutoff=src_cutoff,
        )
    except ConfigError as exc:
        section = "source" if exc.key == "p_pair" else "amplifier"
        raise ConfigError(f"{section}.{exc.key}", str(exc).split(": ", 1)[1]) from None

    quantities = exp.get("quantities")
    if quantities is not None:
        bad = [q for q in quantities if q not in QUANTITIES]
        if bad or not quantities:
            raise ConfigError("experiment.quantities", f"unknown or empty quantities {bad}")
        if "visibility" in quantities and not coherent:
            raise ConfigError("experiment.quantities", "visibility requires input.coherent = true")

    phases = None
    if "phases" in exp:
        phases = []
        for i, v in enumerate(exp["phases"]):
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ConfigError(f"experiment.phases[{i}]", "expected a number")
            phases.append(float(v))
        if len(set(phases)) < 3:
            raise ConfigError("experiment.phases", "need at least 3 distinct phases")

    target = None
    if "target" in exp:
        target = _unit(exp["target"], "experiment.target")

    free = list(exp.get("free_params", []))
    for name in free:
        if name not in FIT_PARAMS:
            raise ConfigError("experiment.free_params", f"unknown parameter {name!r}")
    bounds = {}
    for name, b in exp.get("bounds", {}).items():
        if name not in FIT_PARAMS:
            raise ConfigError(f"experiment.bounds.{name}", "unknown parameter")
        if not (isinstance(b, list) and len(b) == 2):
            raise ConfigError(f"experiment.bounds.{name}", "expected [lo, hi]")
        lo = _unit(b[0], f"experiment.bounds.{name}")
        hi = _unit(b[1], f"experiment.bounds.{name}")
        if lo > hi:
            raise ConfigError(f"experiment.bounds.{name}", "lo > hi")
        bounds[name] = (lo, hi)
    for name in free:
        if name not in bounds:
            raise ConfigError(f"experiment.bounds.{name}", "missing bounds for free parameter")

    if command == "optimize-t" and target is None:
        raise ConfigError("experiment.target", "optimize-t needs a target efficiency")
    if command == "fit" and "data" not in exp:
        raise ConfigError("experiment.data", "fit needs a data file")
    if command in ("fringe", "visibility-surface") and not coherent:
        raise ConfigError("input.coherent", f"{command} requires a coherent input")

    return RunConfig(
        base=base,
        p_values=p_values,
        t_values=t_values,
        attenuation=attenuation,
        source=SourceModel(p_pair, src_cutoff),
        kind=kind,
        quantities=quantities,
        output=exp.get("output"),
        phases=phases,
        overlap=_unit(exp.get("overlap", 1.0), "experiment.overlap"),
        target=target,
        data=exp.get("data"),
        free_params=free,
        bounds=bounds,
    )


def load_config(path: str | Path, command: str, cutoff_override: Optional[int] = None) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("--config", f"malformed JSON: {exc}") from None
    return parse_config(doc, command, cutoff_override)


def _distance(p: float, attenuation: float) -> Optional[float]:
    return None if p >= 1.0 else loss_to_distance(p, attenuation)


def sweep_table(rows: Sequence[SweepRow], attenuation: float = FIBRE_DB_PER_KM) -> list[list[Optional[float]]]:
    return [
        [r.p, r.t, r.gain, r.herald_probability, r.herald_efficiency, r.visibility, _distance(r.p, attenuation)]
        for r in rows
    ]


def render(header: Sequence[str], table: Sequence[Sequence[Optional[float | str]]], fmt_kind: str = "csv") -> str:
    """Serialise a table; reals use nine significant digits.

    ``csv`` leaves absent values empty; ``dat`` is space separated with a
    ``#`` header and writes ``nan`` for absent values so columns stay aligned
    for plotting tools.
    """
    if not table:
        raise ValueError("refusing to write an empty table")
    lines = []
    if fmt_kind == "csv":
        lines.append(",".join(header))
        for row in table:
            lines.append(",".join(v if isinstance(v, str) else fmt(v) for v in row))
    elif fmt_kind == "dat":
        lines.append("# " + " ".join(header))
        for row in table:
            lines.append(" ".join(v if isinstance(v, str) else (fmt(v) or "nan") for v in row))
    else:
        raise ValueError(f"unknown format {fmt_kind!r}")
    return "\n".join(lines) + "\n"


def write_table(header, table, path: str | Path, fmt_kind: str = "csv") -> None:
    text = render(header, table, fmt_kind)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def write_csv(rows: Sequence[SweepRow], path: str | Path, fmt_kind: str = "csv", attenuation: float = FIBRE_DB_PER_KM) -> None:
    """Write sweep rows with the fixed column order of :data:`CSV_HEADER`."""
    write_table(CSV_HEADER, sweep_table(rows, attenuation), path, fmt_kind)


def read_csv(path: str | Path) -> list[SweepRow]:
    """Parse a file written by :func:`write_csv` (csv format) back into rows."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_HEADER:
            raise ValueError(f"unexpected header {header}")
        rows = []
        for rec in reader:
            vals = {k: (float(v) if v != "" else None) for k, v in zip(header, rec)}
            vals.pop("distance_km")
            rows.append(SweepRow(**vals))
    return rows


def _run(command: str, rc: RunConfig) -> tuple[Sequence[str], list[list]]:
    if command in ("gain-surface", "herald-curve", "visibility-surface"):
        spec = SweepSpec(rc.p_values, rc.t_values, rc.base, tuple(rc.quantities or DEFAULT_QUANTITIES[command]))
        rows = sweep(spec)
        for r in rows:
            if r.error:
                log.warning("p=%g t=%g: %s", r.p, r.t, r.error)
        return CSV_HEADER, sweep_table(rows, rc.attenuation)

    if command == "optimize-t":
        quantities = rc.quantities or DEFAULT_QUANTITIES[command]
        rows = []
        for p in rc.p_values:
            t_star = find_min_t(p, rc.target, rc.base)
            res = run_amplifier(replace(rc.base, p=p, t=t_star))
            rows.append(SweepRow(p, t_star, **{q: getattr(res, q) for q in quantities}))
        return CSV_HEADER, sweep_table(rows, rc.attenuation)

    if command == "fringe":
        table = []
        kwargs = {"phases": rc.phases} if rc.phases else {}
        for p in rc.p_values:
            for t in rc.t_values:
                fringe, v = fringe_visibility(replace(rc.base, p=p, t=t), **kwargs)
                table.extend([p, t, phi, prob, v] for phi, prob in fringe)
        return ("p", "t", "phase", "detection_probability", "visibility"), table

    if command == "hom":
        det = rc.base.detector_b
        res = hom_coincidence(rc.source, rc.overlap, (det, det))
        return ("p_pair", "overlap", "coincidence_prob", "visibility"), [
            [rc.source.p_pair, rc.overlap, res.coincidence_prob, res.visibility]
        ]

    if command == "fit":
        data = read_csv(rc.data)
        res = fit_model(data, rc.free_params, rc.bounds, rc.base)
        table = [[name, value] for name, value in res.params.items()]
        table.append(["residual", res.residual])
        return ("param", "value"), table

    raise ValueError(f"unknown command {command!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="heralded-amp", description="Heralded noiseless photon amplifier simulator")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--out", help="output path (overrides experiment.output)")
    parser.add_argument("--format", choices=("csv", "dat"), default="csv")
    parser.add_argument("--seed", type=int, default=None, help="reserved; the engine is deterministic")
    parser.add_argument("--cutoff", type=int, default=None, help="override amplifier.cutoff")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")

    try:
        rc = load_config(args.config, args.command, args.cutoff)
        out = args.out or rc.output
        if args.command != "validate" and not out:
            raise ConfigError("experiment.output", "no output path (use --out)")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if args.command == "validate":
        print("config ok")
        return 0

    try:
        header, table = _run(args.command, rc)
        write_table(header, table, out, args.format)
    except (SimulationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    log.info("wrote %d rows to %s", len(table), out)
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Workbench configuration files.

A config is a YAML document with four sections::

    graph:
      vertices:
        - {kind: cyclic, order: 2}
        - {kind: integers}
        - {kind: table, table: [[0, 1], [1, 0]], lengths: [0, 1]}
      edges: [[0, 1]]
    window:
      lambda_max: 5
      ell_max: 4          # required when a vertex group is infinite
    rd:
      k_max: 4
      l_max: 4
      budget: 16
      seed: 0
      max_iter: 200
      tol: 1.0e-10
      trials: 1000
      r_grid: [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0]
      stability_tol: 0.05
    output:
      dir: out
      format: csv

Only ``graph`` is mandatory; other keys fall back to the values above.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path

import yaml

from .enumeration import BallSpec
from .graph import PresentationGraph
from .vertex_group import VertexGroup


class ConfigError(ValueError):
    pass


@dataclass
class RdParams:
    k_max: int = 4
    l_max: int = 4
    budget: int = 16
    seed: int = 0
    max_iter: int = 200
    tol: float = 1e-10
    trials: int = 1000
    r_grid: list = field(default_factory=lambda: [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0])
    stability_tol: float = 0.05


@dataclass
class OutputParams:
    dir: str = "out"
    format: str = "csv"


@dataclass
class WorkbenchConfig:
    graph_decl: dict
    window: BallSpec
    rd: RdParams = field(default_factory=RdParams)
    output: OutputParams = field(default_factory=OutputParams)
    graph: PresentationGraph = field(init=False, repr=False)

    def __post_init__(self):
        self.graph = build_graph(self.graph_decl)
        self.window.validate_for(self.graph)
        for name in ("k_max", "l_max"):
            v = getattr(self.rd, name)
            if not isinstance(v, int) or v < 0:
                raise ConfigError(f"rd.{name} must be a natural number, got {v!r}")
            if v > self.window.lambda_max:
                raise ConfigError(
                    f"rd.{name} = {v} exceeds window.lambda_max = {self.window.lambda_max}")
        if self.output.format not in ("csv", "json"):
            raise ConfigError(f"output.format must be csv or json, got {self.output.format!r}")

    def to_dict(self) -> dict:
        return {
            "graph": self.graph_decl,
            "window": {"lambda_max": self.window.lambda_max, "ell_max": self.window.ell_max},
            "rd": asdict(self.rd),
            "output": asdict(self.output),
        }


def build_vertex_group(decl: dict, where: str) -> VertexGroup:
    if not isinstance(decl, dict) or "kind" not in decl:
        raise ConfigError(f"{where}: vertex needs a 'kind'")
    kind = decl["kind"]
    lengths = decl.get("lengths")
    try:
        if kind == "cyclic":
            return VertexGroup.cyclic(int(decl["order"]), lengths)
        if kind == "integers":
            if lengths is not None:
                raise ConfigError(f"{where}: the integers take no length table")
            return VertexGroup.integers()
        if kind in ("table", "cayley-table"):
            return VertexGroup.from_table(decl["table"], lengths)
    except KeyError as exc:
        raise ConfigError(f"{where}: missing key {exc}") from None
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    raise ConfigError(f"{where}: unknown vertex kind {kind!r}")


def build_graph(decl: dict) -> PresentationGraph:
    if not isinstance(decl, dict) or "vertices" not in decl:
        raise ConfigError("graph: needs a 'vertices' list")
    groups = [build_vertex_group(v, f"graph.vertices[{i}]")
              for i, v in enumerate(decl["vertices"])]
    try:
        return PresentationGraph(groups, decl.get("edges") or [])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"graph.edges: {exc}") from None


def _section(raw: dict, name: str, cls):
    sec = raw.get(name) or {}
    if not isinstance(sec, dict):
        raise ConfigError(f"{name}: expected a mapping")
    known = set(cls.__dataclass_fields__)
    unknown = set(sec) - known
    if unknown:
        raise ConfigError(f"{name}: unknown keys {sorted(unknown)}")
    return cls(**sec)


def from_dict(raw: dict) -> WorkbenchConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping at top level")
    unknown = set(raw) - {"graph", "window", "rd", "output"}
    if unknown:
        raise ConfigError(f"unknown top-level sections {sorted(unknown)}")
    win = raw.get("window") or {}
    try:
        spec = BallSpec(win.get("lambda_max", 5), win.get("ell_max"))
    except ValueError as exc:
        raise ConfigError(f"window: {exc}") from None
    try:
        return WorkbenchConfig(raw.get("graph"), spec, _section(raw, "rd", RdParams),
                               _section(raw, "output", OutputParams))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def loads(text: str, source: str = "<config>") -> WorkbenchConfig:
    try:
        raw = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        raise ConfigError(
            f"{source}:{mark.line + 1}:{mark.column + 1}: {exc.problem}") from None
    return from_dict(raw)


def load(path: str | Path) -> WorkbenchConfig:
    path = Path(path)
    return loads(path.read_text(encoding="utf-8"), str(path))


def dumps(cfg: WorkbenchConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False, default_flow_style=None)

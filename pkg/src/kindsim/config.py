"""JSON run configuration shared by the CLI subcommands."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

from .dynamics import Params
from .experiments import DEFAULT_DELTA, DEFAULT_EVENT_BUDGET
from .functionals import CertificationSpec
from .graph import GraphSpec


class ConfigError(ValueError):
    pass


REQUIRED = ("mu_plus", "mu_minus")


@dataclass
class RunConfig:
    mu_plus: float
    mu_minus: float
    graph: dict = field(default_factory=lambda: {"kind": "complete", "n": 10})
    epsilon: float = 0.3
    replicates: int = 1000
    event_budget: int = DEFAULT_EVENT_BUDGET
    seed: int = 0
    delta: float = DEFAULT_DELTA
    Ns: list = field(default_factory=lambda: [10, 20, 40])
    stride: int = 1
    init: object = "uniform"
    stop_at_threshold: bool = False
    certification: dict = field(default_factory=dict)
    out: str = "kindsim-out"

    def __post_init__(self):
        try:
            self.graph_spec
            self.params
            CertificationSpec(**self.certification)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not 0.0 < self.epsilon < 0.5:
            raise ConfigError(f"epsilon must lie in (0, 1/2), got {self.epsilon}")
        if self.replicates < 1:
            raise ConfigError("replicates must be at least 1")
        if self.event_budget < 0:
            raise ConfigError("event_budget must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if not 0.0 <= self.delta < 1.0:
            raise ConfigError("delta must lie in [0, 1)")
        if self.stride < 1:
            raise ConfigError("stride must be positive")
        if list(self.Ns) != sorted(self.Ns) or not self.Ns:
            raise ConfigError("Ns must be a non-empty ascending list")
        if self.init != "uniform" and not isinstance(self.init, (int, float)):
            raise ConfigError("init must be 'uniform' or a constant belief")

    @property
    def params(self) -> Params:
        return Params(self.mu_plus, self.mu_minus)

    @property
    def graph_spec(self) -> GraphSpec:
        return GraphSpec.from_dict(self.graph)

    @property
    def cert_spec(self) -> CertificationSpec:
        return CertificationSpec(**self.certification)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        for name in REQUIRED:
            if name not in d:
                raise ConfigError(f"missing required config field '{name}'")
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(d)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def parse_graph_arg(text: str) -> dict:
    """``complete:10``, ``cycle:10``, ``grid:4x4``, ``er:20:0.2`` or ``file:PATH``."""
    kind, _, rest = text.partition(":")
    try:
        if kind == "complete" or kind == "cycle":
            return {"kind": kind, "n": int(rest)}
        if kind == "grid":
            w, h = rest.lower().split("x")
            return {"kind": "grid", "width": int(w), "height": int(h)}
        if kind in ("er", "erdos_renyi"):
            n, p = rest.split(":")
            return {"kind": "erdos_renyi", "n": int(n), "p": float(p)}
        if kind == "file":
            return {"kind": "file", "path": rest}
    except ValueError:
        pass
    raise ConfigError(f"cannot parse graph {text!r}")

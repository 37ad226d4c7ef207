"""Defaults for every tunable, in one place, with environment overrides.

Each command-line flag ``--foo-bar`` can also be set through the environment
variable ``RADONLIKE_FOO_BAR``; explicit flags win.
"""
from __future__ import annotations

import os
from dataclasses import asdict, dataclass, fields
from importlib import resources

ENV_PREFIX = "RADONLIKE_"
REPORT_SCHEMA = "radonlike.report/1"


@dataclass(frozen=True)
class AnalysisConfig:
    input: str = "corpus:degenerate"
    point: str = ""
    seed: int = 0
    threads: int = 1
    # verdict search
    samples: int = 64                 # sampled orthonormal basis triples
    descent_starts: int = 3
    descent_evals: int = 400          # optimizer evaluations per descent
    tau_max: float = 10.0             # witness check grid is 0..tau_max
    n_tau: int = 21
    eps_coef: float = 1e-9            # coefficient threshold relative to ||Q||^s
    margin_floor: float = 1e-6
    slope_floor: float = 0.05
    ymax: float = 25.0
    # Knapp harness
    with_harness: bool = False
    knapp_samples: int = 100_000
    knapp_tau_max: int = 6
    knapp_method: str = "montecarlo"
    # testing integral
    with_testing: bool = False
    testing_tau_max: int = 8
    eta_kind: str = "box"
    eta_half_width: float = 2.0
    # vector fields
    with_vfields: bool = False
    vfields_input: str = "corpus:paraboloid"
    vfields_generations: int = 2
    vfields_probes: int = 1000
    vfields_lo: float = 0.0
    vfields_hi: float = 0.5

    def validate(self):
        for name in ("samples", "descent_evals", "n_tau", "knapp_samples", "vfields_probes",
                     "threads"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.tau_max <= 0 or self.knapp_tau_max <= 0 or self.testing_tau_max <= 0:
            raise ValueError("tau ranges must be positive")
        if not 1 <= self.vfields_generations <= 3:
            raise ValueError("vfields generations must be between 1 and 3")
        return self

    def echo(self) -> dict:
        """Config values that influence results (threads excluded on purpose)."""
        d = asdict(self)
        d.pop("threads")
        return d


def defaults() -> dict:
    return {f.name: f.default for f in fields(AnalysisConfig)}


def env_value(name: str, default):
    """Environment override for the config field ``name`` (strings are converted later)."""
    raw = os.environ.get(ENV_PREFIX + name.upper())
    if raw is None:
        return default
    if isinstance(default, bool):
        return raw.strip().lower() in ("1", "true", "yes", "on")
    return raw


def read_input(source: str) -> tuple[str, str]:
    """Return ``(text, kind)`` for a path or a bundled ``corpus:NAME`` entry."""
    if source.startswith("corpus:"):
        name = source.split(":", 1)[1]
        root = resources.files("radonlike") / "corpus"
        for ext in (".poly", ".vf", ".json"):
            p = root / (name + ext)
            if p.is_file():
                return p.read_text(), ext
        raise FileNotFoundError(f"no corpus entry named {name!r}")
    with open(source) as fh:
        text = fh.read()
    return text, ".json" if source.endswith(".json") else ".poly"


def corpus_names() -> list[str]:
    root = resources.files("radonlike") / "corpus"
    return sorted(p.name.rsplit(".", 1)[0] for p in root.iterdir() if p.is_file())

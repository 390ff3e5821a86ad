"""Policy scenarios: the four care-policy levers and their activation year.

``alpha``  share of formal child-care cost paid by the state
``beta``   free weekly child-care hours for children aged 3 and 4
``gamma``  minimum care-need level for means-tested public social care
``theta``  share of formal social-care cost paid by the state
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

from caresim.errors import InvariantViolation, MissingFile, ParseError, UnknownKey


@dataclass(frozen=True)
class PolicyScenario:
    name: str = "benchmark"
    alpha: float = 0.2
    beta: float = 20.0
    gamma: int = 4
    theta: float = 0.0
    activation_year: int = 2020

    def __post_init__(self) -> None:
        if not 0 <= self.alpha <= 1:
            raise InvariantViolation("alpha", "must lie in [0, 1]")
        if not 0 <= self.theta <= 1:
            raise InvariantViolation("theta", "must lie in [0, 1]")
        if self.beta < 0:
            raise InvariantViolation("beta", "must be non-negative")
        if self.gamma not in range(5):
            raise InvariantViolation("gamma", "must be a care-need level 0-4")

    def levers(self) -> tuple[float, float, int, float]:
        return self.alpha, self.beta, self.gamma, self.theta

    def with_activation(self, year: int) -> "PolicyScenario":
        return replace(self, activation_year=year)


BENCHMARK = PolicyScenario()
PRESETS: dict[str, PolicyScenario] = {
    "benchmark": BENCHMARK,
    "P1": replace(BENCHMARK, name="P1", alpha=0.8),
    "P2": replace(BENCHMARK, name="P2", beta=32.0),
    "P3": replace(BENCHMARK, name="P3", gamma=3),
    "P4": replace(BENCHMARK, name="P4", theta=0.5),
}


@dataclass(frozen=True)
class Levers:
    """Lever values in force in a given year."""

    alpha: float
    beta: float
    gamma: int
    theta: float
    child_subsidy_cap: float  # currency per child per year


def apply_policy(
    scenario: PolicyScenario,
    year: int,
    benchmark: PolicyScenario = BENCHMARK,
    base_subsidy_cap: float = 2000.0,
) -> Levers:
    """Levers in force in ``year``: benchmark values before activation.

    The per-child subsidy cap is fixed at the benchmark contribution rate and
    scales in proportion to ``alpha`` otherwise.
    """
    active = scenario if year >= scenario.activation_year else benchmark
    if benchmark.alpha > 0:
        cap = base_subsidy_cap * active.alpha / benchmark.alpha
    else:
        cap = base_subsidy_cap
    return Levers(active.alpha, active.beta, active.gamma, active.theta, cap)


_SCENARIO_KEYS = {
    "name": str,
    "alpha": float,
    "beta": float,
    "gamma": int,
    "theta": float,
    "activationYear": int,
}


def load_scenario(name_or_path: str | Path, activation_year: int | None = None) -> PolicyScenario:
    """Resolve a preset name (``benchmark``, ``P1``..``P4``) or a scenario file.

    Scenario files use the same ``key = value`` syntax as configs; unspecified
    levers keep their benchmark values. ``activation_year`` overrides a preset's
    year and is the default for files that do not set ``activationYear``.
    """
    name = str(name_or_path)
    if name in PRESETS:
        sc = PRESETS[name]
    else:
        path = Path(name)
        if not path.is_file():
            raise MissingFile(f"no preset or scenario file named {name!r}")
        values: dict = {"name": path.stem}
        for lineno, line in enumerate(path.read_text().splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(lineno, f"expected 'key = value', got {line!r}", str(path))
            key, raw = (s.strip() for s in line.split("=", 1))
            if key not in _SCENARIO_KEYS:
                raise UnknownKey(key)
            try:
                values["activation_year" if key == "activationYear" else key] = _SCENARIO_KEYS[key](raw)
            except ValueError:
                raise ParseError(lineno, f"bad value for {key}: {raw!r}", str(path)) from None
        if activation_year is not None:
            values.setdefault("activation_year", activation_year)
        return PolicyScenario(**values)
    if activation_year is not None:
        sc = sc.with_activation(activation_year)
    return sc

"""JSON scenario files: one population, an optional prize schedule and run options."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .dist import AbilityDistribution, PopulationModel, distribution_from_dict
from .equilibrium import ContestSpec, PrizeSchedule
from .errors import ContestError, ScenarioError

__all__ = ["Scenario", "load_scenario", "bundled_scenarios", "bundled_path"]

_FIELDS = {
    "name", "description", "n", "mu", "F", "G", "prizes", "regime",
    "grid_size", "samples", "seed", "mu_grid", "perturb_scale",
}


@dataclass
class Scenario:
    name: str
    n: int
    mu: float
    F: AbilityDistribution
    G: AbilityDistribution
    prizes: PrizeSchedule | None = None
    regime: str = "general"           # design regime: general or group
    grid_size: int | None = None
    samples: int | None = None
    seed: int | None = None
    mu_grid: list | None = None
    perturb_scale: float | None = None  # scales alpha before verification (negative control)
    description: str = ""
    _raw_prizes: dict | None = field(default=None, repr=False, compare=False)

    @property
    def population(self) -> PopulationModel:
        return PopulationModel(self.mu, self.F, self.G)

    def contest(self) -> ContestSpec:
        if self.prizes is None:
            raise ScenarioError(f"scenario {self.name!r} has no prizes")
        return ContestSpec(self.n, self.population, self.prizes)

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        if not isinstance(data, dict):
            raise ScenarioError("scenario must be a JSON object")
        unknown = set(data) - _FIELDS
        if unknown:
            raise ScenarioError(f"unknown scenario fields: {sorted(unknown)}")
        missing = {"name", "n", "mu", "F", "G"} - set(data)
        if missing:
            raise ScenarioError(f"missing scenario fields: {sorted(missing)}")
        n = data["n"]
        if not isinstance(n, int) or isinstance(n, bool) or n < 2:
            raise ScenarioError(f"n must be an integer >= 2, got {n!r}")
        regime = data.get("regime", "general")
        if regime not in ("general", "group"):
            raise ScenarioError(f"regime must be 'general' or 'group', got {regime!r}")
        raw = data.get("prizes")
        if raw is not None and set(raw) - {"general", "group"}:
            raise ScenarioError(f"unknown prize fields: {sorted(set(raw) - {'general', 'group'})}")
        try:
            prizes = None
            if raw is not None:
                prizes = PrizeSchedule(tuple(raw.get("general", ())), tuple(raw.get("group", ())))
            sc = cls(
                name=str(data["name"]), n=n, mu=float(data["mu"]),
                F=distribution_from_dict(data["F"]), G=distribution_from_dict(data["G"]),
                prizes=prizes, regime=regime,
                grid_size=data.get("grid_size"), samples=data.get("samples"),
                seed=data.get("seed"), mu_grid=data.get("mu_grid"),
                perturb_scale=data.get("perturb_scale"),
                description=data.get("description", ""), _raw_prizes=raw,
            )
            sc.population  # validates the mixture
            if prizes is not None:
                sc.contest()
        except ScenarioError:
            raise
        except (ContestError, ValueError, TypeError) as exc:
            raise ScenarioError(f"scenario {data.get('name')!r}: {exc}") from exc
        return sc

    def to_dict(self) -> dict:
        out = {"name": self.name, "n": self.n, "mu": self.mu,
               "F": self.F.to_dict(), "G": self.G.to_dict()}
        if self.description:
            out["description"] = self.description
        if self.prizes is not None:
            out["prizes"] = {"general": list(self.prizes.general), "group": list(self.prizes.group)}
        if self.regime != "general":
            out["regime"] = self.regime
        for key in ("grid_size", "samples", "seed", "mu_grid", "perturb_scale"):
            if getattr(self, key) is not None:
                out[key] = getattr(self, key)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def load_scenario(path) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON ({exc})") from exc
    return Scenario.from_dict(data)


def bundled_path(name: str) -> Path:
    """Path of a scenario shipped with the package (``name`` without ``.json``)."""
    return Path(str(resources.files("groupcontest") / "scenarios" / f"{name}.json"))


def bundled_scenarios() -> list:
    root = resources.files("groupcontest") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))

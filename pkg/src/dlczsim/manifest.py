"""Run manifests: a hash of every input that affects output, written before
any result file so partial runs are detectable."""

from dataclasses import dataclass, field
from datetime import datetime, timezone
import hashlib
import json

from . import constants
from .errors import ConfigError

TOOL_VERSION = "0.1.0"

CONSTANTS_TABLE = {
    "k_B_J_per_K": constants.BOLTZMANN_J_PER_K,
    "mu_B_J_per_T": constants.BOHR_MAGNETON_J_PER_T,
    "h_J_s": constants.PLANCK_J_S,
    "g_a": constants.LANDE_G_A,
    "delta_g": constants.DELTA_G,
}


def canonical_json(payload) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def scenario_hash(payload) -> str:
    return hashlib.sha256(canonical_json(payload).encode()).hexdigest()


@dataclass
class RunManifest:
    scenario: dict
    outputs: list
    scenario_hash: str = ""
    tool_version: str = TOOL_VERSION
    constants: dict = field(default_factory=lambda: dict(CONSTANTS_TABLE))
    created_utc: str = ""

    def __post_init__(self):
        if not self.scenario_hash:
            self.scenario_hash = scenario_hash(self.scenario)
        if not self.created_utc:
            self.created_utc = datetime.now(timezone.utc).isoformat()

    def write(self, path) -> None:
        payload = {
            "schema": "dlczsim.manifest.v1",
            "scenario_hash": self.scenario_hash,
            "tool_version": self.tool_version,
            "constants": self.constants,
            "created_utc": self.created_utc,
            "outputs": list(self.outputs),
            "scenario": self.scenario,
        }
        with open(path, "w") as handle:
            json.dump(payload, handle, indent=2, sort_keys=True)
            handle.write("\n")


def verify_manifest(path) -> bool:
    """Recompute the scenario hash from the stored inputs and compare."""
    try:
        with open(path) as handle:
            payload = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read manifest {path}: {exc}") from None
    return scenario_hash(payload["scenario"]) == payload["scenario_hash"]

"""Configuration loading: TOML with unit-suffixed keys and strict schemas.

Every numeric key carries its unit in the name (_m, _s, _K, _T_per_m, ...)
and every section rejects unknown keys so typos surface as diagnostics
instead of silently keeping a default.
"""

from dataclasses import dataclass
import math
import sys

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

from . import constants
from .decoherence import AtomEnsemble, Coherence
from .errors import ConfigError
from .geometry import ArrayGeometry
from .link import LinkConfig
from .node import NodeConfig
from .states import NoiseModel

_GEOMETRY_KEYS = {
    "channel_count",
    "beam_separation_m",
    "focal_length_m",
    "write_wavelength_m",
    "shrink_factor",
    "btd_focal_m",
}
_ENSEMBLE_KEYS = {
    "temperature_K",
    "atomic_mass_kg",
    "ensemble_length_m",
    "field_gradient_T_per_m",
    "lifetimes_us",
    "coherence",
}
_NODE_KEYS = {
    "chi",
    "eta_s",
    "eta_t",
    "eta_sw",
    "p_mfs",
    "gamma0",
    "storage_time_s",
    "noise",
}
_NOISE_KEYS = {"v0", "tau_v_s", "residual_phase_rad"}
_LINK_KEYS = {
    "separation_m",
    "fiber_speed_m_per_s",
    "memory_lifetime_s",
    "multiplexed_qubits",
    "p_bsm",
    "fiber_transmission",
    "t_req_single_s",
}


@dataclass(frozen=True)
class AppConfig:
    geometry: ArrayGeometry
    shrink_factor: float
    btd_focal_m: float
    ensemble: AtomEnsemble
    coherence: Coherence
    node: NodeConfig
    link: LinkConfig

    def describe(self) -> dict:
        """Flat dictionary of every input that affects simulation output."""
        return {
            "geometry": {
                "channel_count": self.geometry.channel_count,
                "beam_separation_m": self.geometry.beam_separation_m,
                "focal_length_m": self.geometry.focal_length_m,
                "write_wavelength_m": self.geometry.write_wavelength_m,
                "shrink_factor": self.shrink_factor,
                "btd_focal_m": self.btd_focal_m,
            },
            "ensemble": {
                "temperature_K": self.ensemble.temperature_K,
                "atomic_mass_kg": self.ensemble.atomic_mass_kg,
                "ensemble_length_m": self.ensemble.length_m,
                "field_gradient_T_per_m": self.ensemble.gradient_T_per_m,
                "coherence": {"m_a": self.coherence.m_a, "m_b": self.coherence.m_b},
            },
            "node": {
                "channel_count": self.node.channel_count,
                "chi": self.node.chi,
                "eta_s": self.node.eta_s,
                "eta_t": self.node.eta_t,
                "eta_sw": self.node.eta_sw,
                "p_mfs": self.node.p_mfs,
                "gamma0": self.node.gamma0,
                "lifetimes_s": list(self.node.lifetimes_s),
                "storage_time_s": self.node.storage_time_s,
                "noise": {
                    "v0": self.node.noise.v0,
                    "tau_v_s": self.node.noise.tau_v_s,
                    "residual_phase_rad": self.node.noise.residual_phase_rad,
                },
            },
            "link": {
                "separation_m": self.link.separation_m,
                "fiber_speed_m_per_s": self.link.fiber_speed_m_per_s,
                "memory_lifetime_s": self.link.memory_lifetime_s,
                "multiplexed_qubits": self.link.multiplexed_qubits,
                "p_bsm": self.link.p_bsm,
                "fiber_transmission": self.link.fiber_transmission,
                "t_req_single_s": self.link.t_req_single_s,
            },
        }


def default_config() -> AppConfig:
    return _build({})


def load_config(path=None) -> AppConfig:
    if path is None:
        return default_config()
    try:
        with open(path, "rb") as handle:
            payload = _toml.load(handle)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except _toml.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return _build(payload)


def _check_keys(section: dict, allowed: set, where: str) -> None:
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]!r} in [{where}]")


def _build(payload: dict) -> AppConfig:
    _check_keys(payload, {"geometry", "ensemble", "node", "link"}, "top level")

    geo = dict(payload.get("geometry", {}))
    _check_keys(geo, _GEOMETRY_KEYS, "geometry")
    geometry = ArrayGeometry(
        channel_count=int(geo.get("channel_count", constants.DEFAULT_CHANNEL_COUNT)),
        beam_separation_m=float(geo.get("beam_separation_m", constants.DEFAULT_BEAM_SEPARATION_M)),
        focal_length_m=float(geo.get("focal_length_m", constants.DEFAULT_FOCAL_LENGTH_M)),
        write_wavelength_m=float(
            geo.get("write_wavelength_m", constants.DEFAULT_WRITE_WAVELENGTH_M)
        ),
    )
    shrink_factor = float(geo.get("shrink_factor", constants.DEFAULT_SHRINK_FACTOR))
    btd_focal_m = float(geo.get("btd_focal_m", constants.DEFAULT_BTD_FOCAL_M))

    ens = dict(payload.get("ensemble", {}))
    _check_keys(ens, _ENSEMBLE_KEYS, "ensemble")
    ensemble = AtomEnsemble(
        temperature_K=float(ens.get("temperature_K", constants.DEFAULT_TEMPERATURE_K)),
        atomic_mass_kg=float(ens.get("atomic_mass_kg", constants.RB87_MASS_KG)),
        length_m=float(ens.get("ensemble_length_m", constants.DEFAULT_ENSEMBLE_LENGTH_M)),
        gradient_T_per_m=float(
            ens.get("field_gradient_T_per_m", constants.DEFAULT_FIELD_GRADIENT_T_PER_M)
        ),
    )
    coherence_section = dict(ens.get("coherence", {"m_a": -1, "m_b": 1}))
    _check_keys(coherence_section, {"m_a", "m_b"}, "ensemble.coherence")
    coherence = Coherence(
        m_a=int(coherence_section["m_a"]), m_b=int(coherence_section["m_b"])
    )
    lifetimes_us = ens.get(
        "lifetimes_us", [tau * 1e6 for tau in constants.DEFAULT_LIFETIMES_S]
    )
    lifetimes_s = tuple(float(v) * 1e-6 for v in lifetimes_us)
    if geometry.channel_count != len(lifetimes_s):
        raise ConfigError(
            f"lifetimes_us has {len(lifetimes_s)} entries for "
            f"{geometry.channel_count} channels"
        )

    nod = dict(payload.get("node", {}))
    _check_keys(nod, _NODE_KEYS, "node")
    noise_section = dict(nod.get("noise", {}))
    _check_keys(noise_section, _NOISE_KEYS, "node.noise")
    noise = NoiseModel(
        v0=float(noise_section.get("v0", constants.DEFAULT_V0)),
        tau_v_s=float(noise_section.get("tau_v_s", constants.DEFAULT_TAU_V_S)),
        residual_phase_rad=float(noise_section.get("residual_phase_rad", 0.0)),
    )
    node = NodeConfig(
        channel_count=geometry.channel_count,
        chi=float(nod.get("chi", constants.DEFAULT_EXCITATION_PROBABILITY)),
        eta_s=float(nod.get("eta_s", constants.DEFAULT_ETA_S)),
        eta_t=float(nod.get("eta_t", constants.DEFAULT_ETA_T)),
        eta_sw=float(nod.get("eta_sw", constants.DEFAULT_ETA_SW)),
        p_mfs=float(nod.get("p_mfs", constants.DEFAULT_P_MFS)),
        gamma0=float(nod.get("gamma0", constants.DEFAULT_GAMMA0)),
        lifetimes_s=lifetimes_s,
        noise=noise,
        storage_time_s=float(nod.get("storage_time_s", 1e-6)),
    )

    lnk = dict(payload.get("link", {}))
    _check_keys(lnk, _LINK_KEYS, "link")
    memory_lifetime = lnk.get("memory_lifetime_s", constants.DEFAULT_TAU0_S)
    if isinstance(memory_lifetime, str) and memory_lifetime.lower() in ("inf", "infinity"):
        memory_lifetime = math.inf
    link = LinkConfig(
        separation_m=float(lnk.get("separation_m", 22e3)),
        fiber_speed_m_per_s=float(
            lnk.get("fiber_speed_m_per_s", constants.DEFAULT_FIBER_SPEED_M_PER_S)
        ),
        memory_lifetime_s=float(memory_lifetime),
        multiplexed_qubits=int(lnk.get("multiplexed_qubits", 1)),
        p_bsm=float(lnk.get("p_bsm", constants.DEFAULT_P_BSM)),
        fiber_transmission=float(lnk.get("fiber_transmission", 1.0)),
        t_req_single_s=float(lnk.get("t_req_single_s", constants.DEFAULT_T_REQ_SINGLE_S)),
    )

    return AppConfig(
        geometry=geometry,
        shrink_factor=shrink_factor,
        btd_focal_m=btd_focal_m,
        ensemble=ensemble,
        coherence=coherence,
        node=node,
        link=link,
    )

"""Run configuration: a small TOML schema with documented defaults.

An empty file is the dimer benchmark. Unknown keys and bad values are
rejected with the offending line number and dotted key path.

    [system]     site_energies, couplings ([[m, n, g], ...]), excited_site
    [bath]       kind, alpha, omega_c, omega_min, omega_max, temperature_K,
                 measure_pi_normalization, panels, nodes_per_panel, omega, values
    [chain]      l, d, encoding
    [evolution]  dt_ps, n_steps
    [oracle]     enabled, mode, d_ref, l_ref, max_qubits
    [resources]  n_chains, n_system_qubits
    [output]     path, dat_path, json_path, full_precision
"""

from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from tedopa_sim.errors import ConfigError, InvalidInputError


@dataclass
class SystemConfig:
    site_energies: list = field(default_factory=lambda: [12410.0, 12530.0])
    couplings: list = field(default_factory=lambda: [[0, 1, 87.7]])
    excited_site: int = 0


@dataclass
class BathConfig:
    kind: str = "ohmic_exponential"
    alpha: float = 0.25
    omega_c: float = 100.0
    omega_min: float = 0.0
    omega_max: float | None = None
    temperature_K: float = 0.0
    measure_pi_normalization: bool = True
    panels: int = 400
    nodes_per_panel: int = 16
    omega: list = field(default_factory=list)
    values: list = field(default_factory=list)


@dataclass
class ChainConfig:
    l: int = 5
    d: int = 2
    encoding: str = "binary"


@dataclass
class EvolutionConfig:
    dt_ps: float = 0.01
    n_steps: int = 10


@dataclass
class OracleConfig:
    enabled: bool = False
    mode: str = "same-d"
    d_ref: int = 4
    l_ref: int = 0
    max_qubits: int = 14


@dataclass
class ResourcesConfig:
    n_chains: int = 0
    n_system_qubits: int = 0


@dataclass
class OutputConfig:
    path: str = ""
    dat_path: str = ""
    json_path: str = ""
    full_precision: bool = False


SECTIONS = {
    "system": SystemConfig,
    "bath": BathConfig,
    "chain": ChainConfig,
    "evolution": EvolutionConfig,
    "oracle": OracleConfig,
    "resources": ResourcesConfig,
    "output": OutputConfig,
}


@dataclass
class RunConfig:
    system: SystemConfig = field(default_factory=SystemConfig)
    bath: BathConfig = field(default_factory=BathConfig)
    chain: ChainConfig = field(default_factory=ChainConfig)
    evolution: EvolutionConfig = field(default_factory=EvolutionConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    resources: ResourcesConfig = field(default_factory=ResourcesConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def system_spec(self):
        from tedopa_sim.hamiltonian import SystemSpec

        return SystemSpec(tuple(self.system.site_energies), tuple(map(tuple, self.system.couplings)))

    def spectral_density(self):
        """Zero-temperature density, thermalized when temperature_K > 0."""
        from tedopa_sim.spectral_density import OhmicExponential, Tabulated, thermalize

        b = self.bath
        if b.kind == "ohmic_exponential":
            sd = OhmicExponential(alpha=b.alpha, omega_c=b.omega_c, omega_min=b.omega_min,
                                  omega_max=b.omega_max)
        else:
            sd = Tabulated(omega=tuple(b.omega), values=tuple(b.values))
        if b.temperature_K > 0:
            return thermalize(sd, b.temperature_K)
        return sd

    def spectral_density_base_cutoff(self):
        b = self.bath
        if b.omega_max is not None:
            return b.omega_max
        if b.kind == "ohmic_exponential":
            return 10.0 * b.omega_c
        return max(b.omega) if b.omega else 0.0

    def to_dict(self):
        return dataclasses.asdict(self)


# ------------------------------------------------------------------ parsing

def _key_line(text, section, key):
    """1-based line of ``key`` inside ``[section]`` (or of the section header)."""
    current = None
    header_line = None
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        m = re.match(r"^\[\s*([^\]]+?)\s*\]$", line)
        if m:
            current = m.group(1)
            if section is None and current == key:
                return i
            if current == section:
                header_line = i
            continue
        if current == section and key is not None and re.match(rf"^{re.escape(key)}\s*=", line):
            return i
        if section is None and current is None and re.match(rf"^{re.escape(str(key))}\s*=", line):
            return i
    return header_line


def _coerce(value, default, path):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ValueError(f"{path}: expected true/false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValueError(f"{path}: expected an integer, got {value!r}")
        return value
    if isinstance(default, float) or default is None:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValueError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ValueError(f"{path}: expected a string, got {value!r}")
        return value
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ValueError(f"{path}: expected an array, got {value!r}")
        return value
    return value


def apply_values(config, values, text=""):
    """Merge a nested ``{section: {key: value}}`` dict into ``config``."""
    for section, entries in values.items():
        if section not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]", line=_key_line(text, None, section), key=section)
        if not isinstance(entries, dict):
            raise ConfigError("expected a table", line=_key_line(text, None, section), key=section)
        target = getattr(config, section)
        defaults = SECTIONS[section]()
        names = {f.name for f in dataclasses.fields(target)}
        for key, value in entries.items():
            path = f"{section}.{key}"
            if key not in names:
                raise ConfigError("unknown key", line=_key_line(text, section, key), key=path)
            try:
                setattr(target, key, _coerce(value, getattr(defaults, key), path))
            except ValueError as exc:
                raise ConfigError(str(exc).split(": ", 1)[1], line=_key_line(text, section, key),
                                  key=path) from None
    return config


def validate(config, text=""):
    """Check cross-field constraints; raise ConfigError naming the key."""

    def fail(path, message):
        section, key = path.split(".", 1)
        raise ConfigError(message, line=_key_line(text, section, key), key=path)

    s, b, c, e, o = config.system, config.bath, config.chain, config.evolution, config.oracle
    if not s.site_energies:
        fail("system.site_energies", "need at least one site")
    for v in s.site_energies:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            fail("system.site_energies", f"site energies must be finite numbers, got {v!r}")
    n = len(s.site_energies)
    for entry in s.couplings:
        if not (isinstance(entry, list) and len(entry) == 3):
            fail("system.couplings", "each coupling is [site, site, energy]")
        m, k, g = entry
        if not (isinstance(m, int) and isinstance(k, int)) or m == k or not (0 <= m < n and 0 <= k < n):
            fail("system.couplings", f"coupling {entry} must join two distinct sites below {n}")
        if not isinstance(g, (int, float)) or not math.isfinite(g):
            fail("system.couplings", f"coupling energy {g!r} must be finite")
    if not 0 <= s.excited_site < n:
        fail("system.excited_site", f"must be a site index below {n}")
    if b.kind not in ("ohmic_exponential", "tabulated"):
        fail("bath.kind", "must be 'ohmic_exponential' or 'tabulated'")
    if b.kind == "tabulated" and (not b.omega or len(b.omega) != len(b.values)):
        fail("bath.omega", "tabulated bath needs equally long, non-empty omega and values")
    if b.alpha < 0:
        fail("bath.alpha", "must be non-negative")
    if b.omega_c <= 0:
        fail("bath.omega_c", "must be positive")
    if b.omega_max is not None and b.omega_max <= b.omega_min:
        fail("bath.omega_max", "must exceed omega_min")
    if b.temperature_K < 0:
        fail("bath.temperature_K", "must be non-negative (0 means zero temperature)")
    if b.panels < 1:
        fail("bath.panels", "must be at least 1")
    if b.nodes_per_panel < 2:
        fail("bath.nodes_per_panel", "must be at least 2")
    if c.l < 0:
        fail("chain.l", "must be non-negative")
    if c.encoding not in ("binary", "unary"):
        fail("chain.encoding", "must be 'binary' or 'unary'")
    if c.d < 2:
        fail("chain.d", "must be at least 2")
    if c.encoding == "binary" and c.d & (c.d - 1):
        fail("chain.d", f"binary encoding needs d to be a power of two, got {c.d}")
    if not e.dt_ps > 0:
        fail("evolution.dt_ps", "must be positive")
    if e.n_steps < 1:
        fail("evolution.n_steps", "must be at least 1")
    if o.mode not in ("same-d", "higher-d", "long-chain"):
        fail("oracle.mode", "must be 'same-d', 'higher-d' or 'long-chain'")
    if o.mode == "higher-d" and (o.d_ref <= c.d or o.d_ref & (o.d_ref - 1)):
        fail("oracle.d_ref", "must be a power of two above chain.d")
    if o.mode == "long-chain" and o.l_ref <= c.l:
        fail("oracle.l_ref", "must exceed chain.l")
    if o.max_qubits < 1:
        fail("oracle.max_qubits", "must be positive")
    r = config.resources
    if r.n_chains < 0 or r.n_system_qubits < 0:
        fail("resources.n_chains", "counts must be non-negative (0 means one per site)")
    return config


def parse_config(text):
    """RunConfig from TOML text; empty text gives the defaults."""
    try:
        values = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"syntax error: {exc}", line=int(m.group(1)) if m else None) from None
    config = apply_values(RunConfig(), values, text)
    return validate(config, text)


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InvalidInputError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)


def parse_override(assignment):
    """``section.key=value`` with a TOML value (bare words are strings)."""
    if "=" not in assignment or "." not in assignment.split("=", 1)[0]:
        raise ConfigError(f"override {assignment!r} is not of the form section.key=value")
    path, raw = assignment.split("=", 1)
    section, key = path.strip().split(".", 1)
    try:
        value = tomllib.loads(f"v = {raw.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()
    return {section: {key: value}}


# ------------------------------------------------------------------- echoing

def _format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, list):
        return "[" + ", ".join(_format_value(x) for x in v) + "]"
    return str(v)


def effective_config_lines(config):
    """The resolved config as TOML lines, derived defaults filled in."""
    lines = []
    for section, entries in config.to_dict().items():
        lines.append(f"[{section}]")
        for key, value in entries.items():
            if section == "bath" and key == "omega_max" and value is None:
                value = float(config.spectral_density_base_cutoff())
            lines.append(f"{key} = {_format_value(value)}")
    return lines

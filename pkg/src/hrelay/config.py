"""TOML run configuration: chain description plus an optional sweep.

Layout (``schema_version = 1``)::

    schema_version = 1
    name = "demo"

    [chain]
    protocol = "semi_blind"        # blind | semi_blind | csi | df
    modulation = "ook"             # or a table {delta, p, q}
    # design_snr_db = 30           # blind gains: C_R = 1 + E{Gamma} at this SNR
    # c = 1.0                      # capacity constant override

    [[chain.hops]]
    snr_db = 20.0
    kappa = 0.15
    fading = { family = "nakagami", m = 2 }

    [sweep]
    axis = "snr_db"                # snr_db | gamma_th_db | kappa | N
    start = 0.0
    stop = 40.0
    points = 9
    outputs = ["op"]               # op | bep | ec | ceiling | diversity
    engines = ["closed_form"]      # closed_form | asymptotic | monte_carlo
    gamma_th_db = 0.0

    [[sweep.series]]               # optional; one curve per entry
    label = "df"
    protocol = "df"

SNRs and thresholds are given in dB at this boundary and are linear inside.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from .fading import FadingError, FadingModel, to_h_params
from .sndr import BPSK, OOK, ChainConfig, ChainError, Hop, HopImpairment, ModulationSpec, Protocol

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib
import tomli_w

__all__ = [
    "SCHEMA_VERSION",
    "ConfigError",
    "HopSpec",
    "ChainSpec",
    "Series",
    "SweepSpec",
    "RunConfig",
    "load_config",
    "loads_config",
    "dumps_config",
    "preset_names",
    "load_preset",
    "db_to_linear",
]

SCHEMA_VERSION = 1
AXES = ("snr_db", "gamma_th_db", "kappa", "N")
OUTPUTS = ("op", "bep", "ec", "ceiling", "diversity")
ENGINES = ("closed_form", "asymptotic", "monte_carlo")
MODULATIONS = {"ook": OOK, "bpsk": BPSK}


class ConfigError(ValueError):
    """Schema or invariant violation; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def db_to_linear(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0) if np.ndim(x) else 10.0 ** (float(x) / 10.0)


# ---------------------------------------------------------------------------
# schema objects


@dataclass(frozen=True)
class HopSpec:
    fading: FadingModel
    snr_db: float = 20.0
    kappa: float = 0.0
    gain_constant: float | None = None

    def build(self, snr_db: float | None = None, kappa: float | None = None) -> Hop:
        snr = self.snr_db if snr_db is None else snr_db
        k = self.kappa if kappa is None else kappa
        return Hop(to_h_params(self.fading, db_to_linear(snr)), HopImpairment.from_kappa(k), self.gain_constant)


@dataclass(frozen=True)
class ChainSpec:
    hops: tuple
    protocol: str = "semi_blind"
    modulation: ModulationSpec = OOK
    design_snr_db: float | None = None
    c: float | None = None

    def with_hops(self, n: int) -> "ChainSpec":
        """Chain of ``n`` hops; extra hops repeat the last listed one."""
        hops = tuple(self.hops[min(i, len(self.hops) - 1)] for i in range(n))
        return replace(self, hops=hops)

    def build(self, snr_db=None, kappa=None, protocol: str | None = None) -> ChainConfig:
        n = len(self.hops)
        snrs = [None] * n if snr_db is None else list(np.broadcast_to(np.asarray(snr_db, dtype=float), (n,)))
        ks = [None] * n if kappa is None else list(np.broadcast_to(np.asarray(kappa, dtype=float), (n,)))
        hops = tuple(h.build(s, k) for h, s, k in zip(self.hops, snrs, ks))
        design = None if self.design_snr_db is None else db_to_linear(self.design_snr_db)
        return ChainConfig(hops, Protocol(protocol or self.protocol), self.modulation, design, self.c)


@dataclass(frozen=True)
class Series:
    """One curve: overrides applied on top of the base chain."""

    label: str
    protocol: str | None = None
    kappa: tuple | None = None  # one value (all hops) or one per hop
    kappa_sum: float | None = None  # kappa axis: kappa_1 = x, the others share kappa_sum - x
    n_hops: int | None = None
    snr_offsets_db: tuple | None = None
    gamma_th: float | None = None  # linear threshold override
    hops: tuple | None = None  # full replacement of the hop list
    allocation: str | None = None  # "equal" | "optimal" impairment split of ``budget``
    budget: float | None = None


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    start: float
    stop: float
    points: int
    outputs: tuple = ("op",)
    engines: tuple = ("closed_form",)
    gamma_th_db: float = 0.0
    snr_db: float | None = None  # common SNR when the axis is not snr_db
    snr_offsets_db: tuple | None = None
    series: tuple = ()
    trials: int = 1_000_000
    seed: int = 0
    workers: int = 1
    af_mode: str = "numeric"

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.points)


@dataclass(frozen=True)
class RunConfig:
    chain: ChainSpec
    sweep: SweepSpec | None = None
    name: str = ""

    @property
    def chain_config(self) -> ChainConfig:
        return self.chain.build()


# ---------------------------------------------------------------------------
# parsing


def _req(table: dict, key: str, path: str):
    if key not in table:
        raise ConfigError(f"{path}.{key}", "required field missing")
    return table[key]


def _num(value, path: str, *, positive=False, nonneg=False, integer=False, allow_inf=False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    if math.isnan(value) or (math.isinf(value) and not allow_inf):
        raise ConfigError(path, "must be finite")
    if positive and not value > 0:
        raise ConfigError(path, f"must be positive, got {value!r}")
    if nonneg and value < 0:
        raise ConfigError(path, f"must be nonnegative, got {value!r}")
    if integer and int(value) != value:
        raise ConfigError(path, f"must be an integer, got {value!r}")
    return int(value) if integer else float(value)


def _choice(value, allowed, path: str) -> str:
    if value not in allowed:
        raise ConfigError(path, f"must be one of {list(allowed)}, got {value!r}")
    return value


def _unknown(table: dict, allowed: set, path: str) -> None:
    extra = sorted(set(table) - allowed)
    if extra:
        raise ConfigError(f"{path}.{extra[0]}", "unknown field")


def _parse_fading(table, path: str) -> FadingModel:
    if not isinstance(table, dict):
        raise ConfigError(path, "expected a table with a 'family' key")
    params = dict(table)
    family = _req(params, "family", path)
    params.pop("family")
    try:
        return FadingModel(family, params)
    except FadingError as exc:
        raise ConfigError(path, str(exc)) from None


def _parse_hop(table, path: str) -> HopSpec:
    _unknown(table, {"fading", "snr_db", "snr", "kappa", "gain_constant"}, path)
    fading = _parse_fading(_req(table, "fading", path), f"{path}.fading")
    if "snr" in table and "snr_db" in table:
        raise ConfigError(f"{path}.snr", "give either snr or snr_db, not both")
    if "snr" in table:
        snr_db = 10 * math.log10(_num(table["snr"], f"{path}.snr", positive=True))
    else:
        snr_db = _num(table.get("snr_db", 20.0), f"{path}.snr_db")
    kappa = _num(table.get("kappa", 0.0), f"{path}.kappa", nonneg=True)
    gain = table.get("gain_constant")
    if gain is not None:
        gain = _num(gain, f"{path}.gain_constant", positive=True)
    return HopSpec(fading, snr_db, kappa, gain)


def _parse_modulation(value, path: str) -> ModulationSpec:
    if isinstance(value, str):
        return MODULATIONS[_choice(value.lower(), tuple(MODULATIONS), path)]
    if not isinstance(value, dict):
        raise ConfigError(path, "expected a preset name or a {delta, p, q} table")
    _unknown(value, {"delta", "p", "q", "name"}, path)
    q = value.get("q", [0.5])
    q = [q] if isinstance(q, (int, float)) else list(q)
    try:
        return ModulationSpec(
            _num(value.get("delta", 1.0), f"{path}.delta", positive=True),
            _num(value.get("p", 0.5), f"{path}.p", positive=True),
            tuple(_num(x, f"{path}.q[{i}]", positive=True) for i, x in enumerate(q)),
            str(value.get("name", "custom")),
        )
    except ChainError as exc:
        raise ConfigError(path, str(exc)) from None


def _parse_chain(table, path="chain") -> ChainSpec:
    if not isinstance(table, dict):
        raise ConfigError(path, "expected a table")
    _unknown(table, {"hops", "protocol", "modulation", "design_snr_db", "c"}, path)
    hops = _req(table, "hops", path)
    if not isinstance(hops, list) or not hops:
        raise ConfigError(f"{path}.hops", "need at least one hop")
    specs = tuple(_parse_hop(h, f"{path}.hops[{i}]") for i, h in enumerate(hops))
    protocol = _choice(table.get("protocol", "semi_blind"), tuple(p.value for p in Protocol), f"{path}.protocol")
    mod = _parse_modulation(table.get("modulation", "ook"), f"{path}.modulation")
    design = table.get("design_snr_db")
    if design is not None:
        design = _num(design, f"{path}.design_snr_db")
    c = table.get("c")
    if c is not None:
        c = _num(c, f"{path}.c", positive=True)
    spec = ChainSpec(specs, protocol, mod, design, c)
    try:
        spec.build()
    except (ChainError, FadingError) as exc:
        raise ConfigError(path, str(exc)) from None
    return spec


def _num_list(value, path, **kw) -> tuple:
    items = value if isinstance(value, list) else [value]
    return tuple(_num(x, f"{path}[{i}]", **kw) for i, x in enumerate(items))


def _parse_series(table, path: str) -> Series:
    _unknown(table, {f.name for f in fields(Series)}, path)
    label = _req(table, "label", path)
    kw: dict[str, Any] = {"label": str(label)}
    if "protocol" in table:
        kw["protocol"] = _choice(table["protocol"], tuple(p.value for p in Protocol), f"{path}.protocol")
    if "kappa" in table:
        kw["kappa"] = _num_list(table["kappa"], f"{path}.kappa", nonneg=True)
    if "kappa_sum" in table:
        kw["kappa_sum"] = _num(table["kappa_sum"], f"{path}.kappa_sum", positive=True)
    if "n_hops" in table:
        kw["n_hops"] = _num(table["n_hops"], f"{path}.n_hops", positive=True, integer=True)
    if "snr_offsets_db" in table:
        kw["snr_offsets_db"] = _num_list(table["snr_offsets_db"], f"{path}.snr_offsets_db")
    if "gamma_th" in table:
        kw["gamma_th"] = _num(table["gamma_th"], f"{path}.gamma_th", positive=True)
    if "hops" in table:
        kw["hops"] = tuple(_parse_hop(h, f"{path}.hops[{i}]") for i, h in enumerate(table["hops"]))
    if "allocation" in table:
        kw["allocation"] = _choice(table["allocation"], ("equal", "optimal"), f"{path}.allocation")
    if "budget" in table:
        kw["budget"] = _num(table["budget"], f"{path}.budget", positive=True)
    if kw.get("allocation") and kw.get("budget") is None:
        raise ConfigError(f"{path}.budget", "required when allocation is set")
    return Series(**kw)


def _parse_sweep(table, path="sweep") -> SweepSpec:
    if not isinstance(table, dict):
        raise ConfigError(path, "expected a table")
    _unknown(table, {f.name for f in fields(SweepSpec)}, path)
    axis = _choice(_req(table, "axis", path), AXES, f"{path}.axis")
    start = _num(_req(table, "start", path), f"{path}.start")
    stop = _num(_req(table, "stop", path), f"{path}.stop")
    points = _num(_req(table, "points", path), f"{path}.points", integer=True)
    if points < 2:
        raise ConfigError(f"{path}.points", "need at least 2 points")
    outputs = tuple(_choice(o, OUTPUTS, f"{path}.outputs[{i}]") for i, o in enumerate(table.get("outputs", ["op"])))
    engines = tuple(
        _choice(e, ENGINES, f"{path}.engines[{i}]") for i, e in enumerate(table.get("engines", ["closed_form"]))
    )
    if not engines:
        raise ConfigError(f"{path}.engines", "need at least one engine")
    if not outputs:
        raise ConfigError(f"{path}.outputs", "need at least one output")
    kw: dict[str, Any] = dict(axis=axis, start=start, stop=stop, points=points, outputs=outputs, engines=engines)
    kw["gamma_th_db"] = _num(table.get("gamma_th_db", 0.0), f"{path}.gamma_th_db")
    if "snr_db" in table:
        kw["snr_db"] = _num(table["snr_db"], f"{path}.snr_db")
    if "snr_offsets_db" in table:
        kw["snr_offsets_db"] = _num_list(table["snr_offsets_db"], f"{path}.snr_offsets_db")
    kw["series"] = tuple(_parse_series(s, f"{path}.series[{i}]") for i, s in enumerate(table.get("series", [])))
    kw["trials"] = _num(table.get("trials", 1_000_000), f"{path}.trials", positive=True, integer=True)
    kw["seed"] = _num(table.get("seed", 0), f"{path}.seed", nonneg=True, integer=True)
    kw["workers"] = _num(table.get("workers", 1), f"{path}.workers", positive=True, integer=True)
    kw["af_mode"] = _choice(table.get("af_mode", "numeric"), ("exact", "approx", "numeric"), f"{path}.af_mode")
    if axis == "N" and (start < 1 or int(start) != start or int(stop) != stop):
        raise ConfigError(f"{path}.start", "the N axis needs integer hop counts >= 1")
    return SweepSpec(**kw)


def _from_dict(data: dict) -> RunConfig:
    version = data.get("schema_version")
    if version is None:
        raise ConfigError("schema_version", "required field missing")
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported version {version!r}; expected {SCHEMA_VERSION}")
    _unknown(data, {"schema_version", "name", "chain", "sweep"}, "<root>")
    chain = _parse_chain(_req(data, "chain", "<root>"))
    sweep = _parse_sweep(data["sweep"]) if "sweep" in data else None
    return RunConfig(chain, sweep, str(data.get("name", "")))


def loads_config(text: str) -> RunConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("<file>", f"not valid TOML: {exc}") from None
    return _from_dict(data)


def load_config(path) -> RunConfig:
    """Parse and validate a TOML config file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read: {exc.strerror}") from None
    return loads_config(text)


# ---------------------------------------------------------------------------
# serialisation


def _hop_dict(h: HopSpec) -> dict:
    out = {"snr_db": h.snr_db, "kappa": h.kappa, "fading": {"family": h.fading.family, **h.fading.as_dict}}
    if h.gain_constant is not None:
        out["gain_constant"] = h.gain_constant
    return out


def _modulation_value(m: ModulationSpec):
    for name, preset in MODULATIONS.items():
        if m == preset:
            return name
    return {"delta": m.delta, "p": m.p, "q": list(m.q), "name": m.name}


def _drop_none(d: dict) -> dict:
    return {k: v for k, v in d.items() if v is not None}


def to_dict(cfg: RunConfig) -> dict:
    c = cfg.chain
    chain = _drop_none({
        "protocol": c.protocol,
        "modulation": _modulation_value(c.modulation),
        "design_snr_db": c.design_snr_db,
        "c": c.c,
        "hops": [_hop_dict(h) for h in c.hops],
    })
    out: dict[str, Any] = {"schema_version": SCHEMA_VERSION}
    if cfg.name:
        out["name"] = cfg.name
    out["chain"] = chain
    if cfg.sweep is not None:
        s = cfg.sweep
        sweep = {f.name: getattr(s, f.name) for f in fields(SweepSpec) if f.name != "series"}
        for key in ("outputs", "engines", "snr_offsets_db"):
            if sweep[key] is not None:
                sweep[key] = list(sweep[key])
        sweep = _drop_none(sweep)
        if s.series:
            series = []
            for item in s.series:
                d = _drop_none({f.name: getattr(item, f.name) for f in fields(Series)})
                for key in ("kappa", "snr_offsets_db"):
                    if key in d:
                        d[key] = list(d[key])
                if "hops" in d:
                    d["hops"] = [_hop_dict(h) for h in d["hops"]]
                series.append(d)
            sweep["series"] = series
        out["sweep"] = sweep
    return out


def dumps_config(cfg: RunConfig) -> str:
    return tomli_w.dumps(to_dict(cfg))


# ---------------------------------------------------------------------------
# presets


def preset_names() -> list[str]:
    root = resources.files("hrelay") / "presets"
    return sorted((p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml")), key=lambda n: (len(n), n))


def load_preset(name: str) -> RunConfig:
    root = resources.files("hrelay") / "presets"
    target = root / f"{name}.toml"
    if not target.is_file():
        raise ConfigError("preset", f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return loads_config(target.read_text(encoding="utf-8"))

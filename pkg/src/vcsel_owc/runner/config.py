"""Scenario configuration: nested dataclasses loaded from strict JSON.

Unknown keys are rejected and every validation failure carries the dotted
path of the offending field, e.g. ``layout.d_cell: must be positive``.
"""
from __future__ import annotations

import copy
import dataclasses
import hashlib
import json
import math
import typing
from dataclasses import dataclass, field
from pathlib import Path

from ..activation import BenchmarkScheme, TimingParams
from ..channel import BeamParams, CcrParams, OdtxParams
from ..geometry import OrientationModel, build_grid_array
from ..link import ApdNoiseLedger, OfdmParams


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class FieldError(ValueError):
    def __init__(self, name: str, message: str):
        self.name = name
        super().__init__(message)


def _positive(obj, *names):
    for n in names:
        if not getattr(obj, n) > 0:
            raise FieldError(n, "must be positive")


@dataclass(frozen=True)
class LayoutConfig:
    n_side: int = 10
    d_cell: float = 0.1
    d_beam: float = 0.012
    ap_height: float = 3.5
    ue_height: float = 1.5

    def __post_init__(self):
        _positive(self, "n_side", "d_cell", "d_beam")
        if self.ap_height <= self.ue_height:
            raise FieldError("ap_height", "must exceed ue_height")

    @property
    def h(self) -> float:
        return self.ap_height - self.ue_height

    def build(self, n_side: int | None = None, d_cell: float | None = None):
        return build_grid_array(n_side or self.n_side, d_cell or self.d_cell,
                                self.ap_height, self.ue_height, self.d_beam)


@dataclass(frozen=True)
class ReceiverConfig:
    b_l: float = 1.5e9
    a_eff: float = math.pi * 0.25 * 0.25 * 1e-4
    psi_c_deg: float = 60.0
    g_apd: float = 30.0
    r_apd: float = 0.9
    rin_db_hz: float = -155.0
    r_f: float = 50.0
    temperature: float = 300.0
    k_a: float = 0.7
    p_n: float = 1e-6

    def __post_init__(self):
        _positive(self, "b_l", "a_eff", "psi_c_deg", "g_apd", "r_apd", "r_f")
        if not 0 < self.k_a < 1:
            raise FieldError("k_a", "must lie in (0, 1)")
        if self.temperature < 0:
            raise FieldError("temperature", "must be non-negative")
        if self.p_n < 0:
            raise FieldError("p_n", "must be non-negative")

    def ledger(self) -> ApdNoiseLedger:
        return ApdNoiseLedger(b_l=self.b_l, a_eff=self.a_eff,
                              psi_c=math.radians(self.psi_c_deg), g_apd=self.g_apd,
                              r_apd=self.r_apd, rin=10 ** (self.rin_db_hz / 10),
                              r_f=self.r_f, temperature=self.temperature,
                              k_a=self.k_a, p_n=self.p_n)


@dataclass(frozen=True)
class OdtxConfig:
    lambertian_order: float = 2.0
    p_tx_od: float = 0.01
    a_od: float = 1e-4
    n_ref: float = 1.5
    psi_fov_deg: float = 60.0
    pd_tilt_deg: float = 30.0
    pd_spacing: float = 0.5

    def __post_init__(self):
        if self.pd_spacing < 0:
            raise FieldError("pd_spacing", "must be non-negative")

    def params(self) -> OdtxParams:
        return OdtxParams(self.lambertian_order, self.p_tx_od, self.a_od, self.n_ref,
                          math.radians(self.psi_fov_deg))


@dataclass(frozen=True)
class CcrConfig:
    depth: float = 5e-3
    n_re: float = 1.5
    l_ccr: float = 5e-3
    aperture_radius: float = 2.5e-3
    acceptance_deg: float = 45.0
    d_rxap: float = 5e-3
    footprint_factor: float = 1.0

    def params(self) -> CcrParams:
        return CcrParams(self.depth, self.n_re, self.l_ccr, self.aperture_radius,
                         math.radians(self.acceptance_deg), self.d_rxap,
                         self.footprint_factor)


@dataclass(frozen=True)
class SweepConfig:
    d_cell: list = field(default_factory=lambda: [0.02, 0.04, 0.05, 0.06, 0.08, 0.1,
                                                  0.12, 0.14, 0.16, 0.18, 0.2])
    n_side: list = field(default_factory=lambda: [1, 2, 3, 5, 10])
    n_ue: list = field(default_factory=lambda: [1, 2, 4, 5, 6, 8, 10, 15, 20, 30, 40, 50])
    speeds: list = field(default_factory=lambda: [0.1, 0.5, 1.0, 1.5, 2.0])
    t_exp: list = field(default_factory=lambda: [100.0])

    def __post_init__(self):
        for name in ("d_cell", "speeds", "t_exp"):
            if any(v <= 0 for v in getattr(self, name)):
                raise FieldError(name, "entries must be positive")
        if any(int(v) != v or v < 1 for v in self.n_side):
            raise FieldError("n_side", "entries must be positive integers")
        if any(int(v) != v or v < 0 for v in self.n_ue):
            raise FieldError("n_ue", "entries must be non-negative integers")


@dataclass(frozen=True)
class SamplesConfig:
    mc: int = 1_000_000
    array_mc: int = 200_000
    grid: int = 41
    trials: int = 4000
    chunk: int = 100_000

    def __post_init__(self):
        _positive(self, "mc", "array_mc", "grid", "trials", "chunk")


@dataclass(frozen=True)
class SchemeConfig:
    kind: str = "ccr"
    delay: float = 0.0
    pos_error_std: float = 0.0

    def scheme(self) -> BenchmarkScheme:
        return BenchmarkScheme(self.kind, self.delay, self.pos_error_std)

    def __post_init__(self):
        try:
            self.scheme()
        except ValueError as exc:
            raise FieldError("kind", str(exc)) from None


def _default_schemes():
    return [SchemeConfig("ccr"), SchemeConfig("odtx", 0.030),
            SchemeConfig("isvlp", 0.0443, 0.0397), SchemeConfig("isvlp", 0.0443, 0.005)]


@dataclass(frozen=True)
class MobilityConfig:
    n_ue: int = 5
    theta_fwhm_deg: float = 4.0
    pause_time: float = 0.0
    dt: float = 1e-3
    window_steps: int = 20
    replicates: int = 2000
    schemes: list = field(default_factory=_default_schemes)

    def __post_init__(self):
        _positive(self, "n_ue", "dt", "window_steps", "replicates", "theta_fwhm_deg")
        if self.dt > 1e-3:
            raise FieldError("dt", "must not exceed 1 ms")
        if self.pause_time < 0:
            raise FieldError("pause_time", "must be non-negative")


@dataclass(frozen=True)
class AnnConfig:
    n_side: int = 3
    theta_fwhm_deg: float = 4.0
    n_samples: int = 100_000
    n_hidden: list = field(default_factory=lambda: [5])
    epochs: int = 30
    learning_rate: float = 0.01
    batch_size: int = 256
    orientations: list = field(default_factory=lambda: ["fixed", "m1", "m2"])
    uplinks: list = field(default_factory=lambda: ["odtx", "single"])
    isvlp_errors: list = field(default_factory=lambda: [0.0397])
    positioning_head: bool = True

    def __post_init__(self):
        _positive(self, "n_side", "n_samples", "epochs", "learning_rate", "batch_size")
        for o in self.orientations:
            if o not in ("fixed", "m1", "m2"):
                raise FieldError("orientations", f"unknown model {o!r}")
        for u in self.uplinks:
            if u not in ("odtx", "single"):
                raise FieldError("uplinks", f"unknown uplink {u!r}")


NOISE_MODES = ("signal", "frozen", "calibrated")
ROUNDED_POWERS_MW = {2.0: 19.0, 4.0: 60.0, 6.0: 129.0}


@dataclass(frozen=True)
class ScenarioConfig:
    experiment: str = "default"
    seed: int = 1
    workers: typing.Optional[int] = None
    lambda_nm: float = 1550.0
    theta_fwhm_deg: list = field(default_factory=lambda: [2.0, 4.0, 6.0])
    p_tx_mw: typing.Optional[list] = field(default_factory=lambda: [19.0, 60.0, 129.0])
    noise_mode: str = "frozen"
    calibration_snr_db: list = field(default_factory=lambda: [27.7, 23.7, 22.7])
    ici: str = "both"
    r_threshold: float = 2.5e9
    full_array_map: bool = True
    layout: LayoutConfig = field(default_factory=LayoutConfig)
    receiver: ReceiverConfig = field(default_factory=ReceiverConfig)
    ofdm: OfdmParams = field(default_factory=OfdmParams)
    timing: TimingParams = field(default_factory=TimingParams)
    orientation: OrientationModel = field(default_factory=OrientationModel)
    odtx: OdtxConfig = field(default_factory=OdtxConfig)
    ccr: CcrConfig = field(default_factory=CcrConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    samples: SamplesConfig = field(default_factory=SamplesConfig)
    mobility: MobilityConfig = field(default_factory=MobilityConfig)
    ann: AnnConfig = field(default_factory=AnnConfig)

    def __post_init__(self):
        if not 0 <= self.seed < 2**64 or int(self.seed) != self.seed:
            raise FieldError("seed", "must be an integer in [0, 2**64)")
        if self.workers is not None and self.workers < 1:
            raise FieldError("workers", "must be >= 1")
        if self.noise_mode not in NOISE_MODES:
            raise FieldError("noise_mode", f"must be one of {NOISE_MODES}")
        if self.ici not in ("on", "off", "both"):
            raise FieldError("ici", "must be 'on', 'off' or 'both'")
        if not self.theta_fwhm_deg or any(t <= 0 for t in self.theta_fwhm_deg):
            raise FieldError("theta_fwhm_deg", "need positive angles")
        if self.p_tx_mw is not None:
            if len(self.p_tx_mw) != len(self.theta_fwhm_deg):
                raise FieldError("p_tx_mw", "length must match theta_fwhm_deg")
            if any(p <= 0 for p in self.p_tx_mw):
                raise FieldError("p_tx_mw", "must be positive")
        if self.noise_mode == "calibrated" and len(self.calibration_snr_db) != len(self.theta_fwhm_deg):
            raise FieldError("calibration_snr_db", "length must match theta_fwhm_deg")
        if self.r_threshold < 0:
            raise FieldError("r_threshold", "must be non-negative")

    @property
    def wavelength(self) -> float:
        return self.lambda_nm * 1e-9

    def tx_power(self, theta_deg: float) -> float:
        """Transmit power in watts for a given FWHM angle.

        Uses the configured list when it names this angle, else the rounded
        eye-safety powers (19/60/129 mW), else the eye-safety solver.
        """
        from ..eyesafety import max_transmit_power
        if self.p_tx_mw is not None and theta_deg in self.theta_fwhm_deg:
            return self.p_tx_mw[self.theta_fwhm_deg.index(theta_deg)] * 1e-3
        if self.p_tx_mw is not None and float(theta_deg) in ROUNDED_POWERS_MW:
            return ROUNDED_POWERS_MW[float(theta_deg)] * 1e-3
        return max_transmit_power(self.wavelength, theta_deg)

    def beam(self, theta_deg: float) -> BeamParams:
        return BeamParams.from_fwhm(self.wavelength, theta_deg, self.tx_power(theta_deg))

    def calibration_target(self, theta_deg: float) -> float:
        return self.calibration_snr_db[self.theta_fwhm_deg.index(theta_deg)]

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        """Short hash of every field that can change results (not ``workers``)."""
        d = self.to_dict()
        d.pop("workers")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


# --------------------------------------------------------------------------
# loading
# --------------------------------------------------------------------------

def _coerce(tp, value, path):
    origin = typing.get_origin(tp)
    if origin is typing.Union:
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        if value is None:
            return None
        return _coerce(args[0], value, path)
    if dataclasses.is_dataclass(tp):
        return _build(tp, value, path)
    if tp is list or origin is list:
        if not isinstance(value, list):
            raise ConfigError(path, "expected a list")
        return list(value)
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, "expected a number")
        return float(value)
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ConfigError(path, "expected an integer")
        return int(value)
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(path, "expected true/false")
        return value
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(path, "expected a string")
        return value
    return value


def _build(cls, data, path: str):
    if not isinstance(data, dict):
        raise ConfigError(path, "expected an object")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls) if f.init}
    for key in data:
        if key not in names:
            raise ConfigError(f"{path}.{key}" if path else key, "unknown key")
    kwargs = {}
    for name in names:
        if name not in data:
            continue
        sub = f"{path}.{name}" if path else name
        if cls is MobilityConfig and name == "schemes":
            if not isinstance(data[name], list):
                raise ConfigError(sub, "expected a list")
            kwargs[name] = [_build(SchemeConfig, s, f"{sub}[{i}]")
                            for i, s in enumerate(data[name])]
            continue
        kwargs[name] = _coerce(hints[name], data[name], sub)
    try:
        return cls(**kwargs)
    except FieldError as exc:
        raise ConfigError(f"{path}.{exc.name}" if path else exc.name, str(exc)) from None
    except (ValueError, TypeError) as exc:
        raise ConfigError(path or "<root>", str(exc)) from None


def config_from_dict(data: dict) -> ScenarioConfig:
    return _build(ScenarioConfig, data, "")


def apply_overrides(data: dict, overrides) -> dict:
    """Apply ``key.sub=value`` strings; values are parsed as JSON when possible."""
    out = copy.deepcopy(data)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(item, "override must look like key=value")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        parts = key.strip().split(".")
        node = out
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(key, "cannot descend into a non-object")
        node[parts[-1]] = value
    return out


def load_config(path=None, overrides=()) -> ScenarioConfig:
    data: dict = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(str(path), f"cannot read config ({exc.strerror})") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(str(path), f"invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return config_from_dict(apply_overrides(data, overrides))

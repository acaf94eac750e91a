"""Run configuration files.

A run config is a YAML mapping that names a protocol, a seed, the
hardware (source, fiber or birefringent element, detectors) and one
protocol-specific parameter section.  Hardware entries accept either a
preset name or an explicit mapping; every numeric key carries its unit
as a suffix.  Validation errors name the offending field by its dotted
path (for example ``detectors.a.efficiency``).

Example (time-of-flight scan)::

    protocol: tof
    seed: 7
    source: fig1-source
    fiber: smf-fixture
    detectors:
      a: {efficiency: 1.0, jitter_ps: 100.0}
      b: {efficiency: 1.0, jitter_ps: 100.0}
    tof:
      wdm_min_nm: 1250.0
      wdm_max_nm: 1350.0
      wdm_bin_nm: 4.0
      duration_s: 1.0

Detector ``a`` is the local (reference) arm where the protocol has
one; ``b`` is the fiber or remote arm.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import yaml

from .core import TYPE_I, TYPE_II
from .detection import DetectorSpec
from .errors import ConfigError
from .fiber import (
    ELEMENT_PRESETS,
    FIBER_PRESETS,
    BirefringentElement,
    FiberSpec,
    QuadraticCoefficients,
    Sellmeier3Coefficients,
    birefringent_plate,
)
from .source import GAUSSIAN, RECTANGULAR, SOURCE_PRESETS, SourceSpec

PROTOCOLS = ("tof", "interferometer", "pmd", "calibrate")


@dataclass
class RunConfig:
    protocol: str
    seed: int
    source: SourceSpec
    fiber: FiberSpec | None
    element: BirefringentElement | None
    detector_a: DetectorSpec | None
    detector_b: DetectorSpec | None
    params: dict


_MISSING = object()


def _err(path: str, msg: str) -> ConfigError:
    return ConfigError(f"{path}: {msg}")


def _loc(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _require_mapping(obj, path: str) -> dict:
    if not isinstance(obj, dict):
        raise _err(path, f"expected a mapping, got {type(obj).__name__}")
    return obj


def _check_known(d: dict, known, path: str) -> None:
    for key in d:
        if key not in known:
            raise _err(_loc(path, str(key)), "unknown field")


def _num(d: dict, key: str, path: str, *, default=_MISSING, allow_none=False):
    if key not in d:
        if default is _MISSING:
            raise _err(_loc(path, key), "missing required field")
        return default
    v = d[key]
    if v is None and allow_none:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise _err(_loc(path, key), f"expected a finite number, got {v!r}")
    return float(v)


def _int(d: dict, key: str, path: str, *, default=_MISSING):
    if key not in d:
        if default is _MISSING:
            raise _err(_loc(path, key), "missing required field")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise _err(_loc(path, key), f"expected an integer, got {v!r}")
    return v


def _bool(d: dict, key: str, path: str, *, default=False):
    v = d.get(key, default)
    if not isinstance(v, bool):
        raise _err(_loc(path, key), f"expected true/false, got {v!r}")
    return v


def _str(d: dict, key: str, path: str, *, default=_MISSING, choices=None):
    if key not in d:
        if default is _MISSING:
            raise _err(_loc(path, key), "missing required field")
        return default
    v = d[key]
    if not isinstance(v, str):
        raise _err(_loc(path, key), f"expected a string, got {v!r}")
    if choices is not None and v not in choices:
        raise _err(_loc(path, key), f"must be one of {sorted(choices)}, got {v!r}")
    return v


_SOURCE_FIELDS = {
    "lambda_pump_nm",
    "pair_rate_hz",
    "signal_center_nm",
    "signal_fwhm_nm",
    "spectral_shape",
    "pm_type",
    "axis_angle_deg",
    "pump_linewidth_hz",
    "temperature_c",
    "temperature_range_c",
    "tuning_slope_nm_per_c",
}


def _parse_source(obj, path: str) -> SourceSpec:
    if isinstance(obj, str):
        if obj not in SOURCE_PRESETS:
            raise _err(path, f"unknown source preset {obj!r} "
                             f"(have {sorted(SOURCE_PRESETS)})")
        return SOURCE_PRESETS[obj]()
    d = _require_mapping(obj, path)
    _check_known(d, _SOURCE_FIELDS, path)
    rng_c = d.get("temperature_range_c", [0.0, 100.0])
    if (
        not isinstance(rng_c, (list, tuple))
        or len(rng_c) != 2
        or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in rng_c)
    ):
        raise _err(f"{path}.temperature_range_c", "expected a [low, high] pair")
    kwargs = dict(
        lambda_pump_nm=_num(d, "lambda_pump_nm", path),
        pair_rate_hz=_num(d, "pair_rate_hz", path),
        signal_center_nm=_num(d, "signal_center_nm", path),
        signal_fwhm_nm=_num(d, "signal_fwhm_nm", path),
        spectral_shape=_str(d, "spectral_shape", path, default=GAUSSIAN,
                            choices={GAUSSIAN, RECTANGULAR}),
        pm_type=_str(d, "pm_type", path, default=TYPE_I,
                     choices={TYPE_I, TYPE_II}),
        axis_angle_rad=math.radians(_num(d, "axis_angle_deg", path, default=0.0)),
        pump_linewidth_hz=_num(d, "pump_linewidth_hz", path, default=0.0),
        temperature_c=_num(d, "temperature_c", path, default=25.0),
        tuning_slope_nm_per_c=_num(d, "tuning_slope_nm_per_c", path, default=0.0),
        temperature_range_c=(float(rng_c[0]), float(rng_c[1])),
    )
    try:
        return SourceSpec(**kwargs)
    except ValueError as exc:
        raise _err(path, str(exc)) from exc


_MODEL_FIELDS = {
    "sellmeier3": {"a_ps_per_km", "b_ps_per_nm2_km", "c_ps_nm2_per_km"},
    "quadratic": {"tau0_ps_per_km", "lambda0_nm", "s0_ps_per_nm2_km"},
}


def _parse_fiber(obj, path: str) -> FiberSpec:
    if isinstance(obj, str):
        if obj not in FIBER_PRESETS:
            raise _err(path, f"unknown fiber preset {obj!r} "
                             f"(have {sorted(FIBER_PRESETS)})")
        return FIBER_PRESETS[obj]()
    d = _require_mapping(obj, path)
    _check_known(d, {"length_km", "attenuation_db_per_km", "model"}, path)
    mpath = f"{path}.model"
    md = _require_mapping(d.get("model"), mpath)
    kind = _str(md, "kind", mpath, choices=set(_MODEL_FIELDS))
    _check_known(md, _MODEL_FIELDS[kind] | {"kind"}, mpath)
    try:
        if kind == "sellmeier3":
            model = Sellmeier3Coefficients(
                a_ps_per_km=_num(md, "a_ps_per_km", mpath),
                b_ps_per_nm2_km=_num(md, "b_ps_per_nm2_km", mpath),
                c_ps_nm2_per_km=_num(md, "c_ps_nm2_per_km", mpath),
            )
        else:
            model = QuadraticCoefficients(
                tau0_ps_per_km=_num(md, "tau0_ps_per_km", mpath),
                lambda0_nm=_num(md, "lambda0_nm", mpath),
                s0_ps_per_nm2_km=_num(md, "s0_ps_per_nm2_km", mpath),
            )
        return FiberSpec(
            length_km=_num(d, "length_km", path),
            model=model,
            attenuation_db_per_km=_num(d, "attenuation_db_per_km", path, default=0.0),
        )
    except ValueError as exc:
        raise _err(path, str(exc)) from exc


def _parse_element(obj, path: str) -> BirefringentElement:
    if isinstance(obj, str):
        if obj not in ELEMENT_PRESETS:
            raise _err(path, f"unknown element preset {obj!r} "
                             f"(have {sorted(ELEMENT_PRESETS)})")
        return ELEMENT_PRESETS[obj]()
    d = _require_mapping(obj, path)
    angle = math.radians(_num(d, "axis_angle_deg", path, default=0.0))
    try:
        if "dgd_fs" in d:
            _check_known(d, {"dgd_fs", "axis_angle_deg"}, path)
            return BirefringentElement(dgd_fs=_num(d, "dgd_fs", path),
                                       axis_angle_rad=angle)
        if "delta_n" in d:
            _check_known(d, {"delta_n", "length_m", "axis_angle_deg"}, path)
            return birefringent_plate(
                delta_n=_num(d, "delta_n", path),
                length_m=_num(d, "length_m", path),
                axis_angle_rad=angle,
            )
    except ValueError as exc:
        raise _err(path, str(exc)) from exc
    raise _err(path, "element needs either dgd_fs or delta_n plus length_m")


def _parse_detector(obj, path: str, det_id: str) -> DetectorSpec:
    d = _require_mapping(obj, path)
    _check_known(d, {"efficiency", "dark_rate_cps", "jitter_ps", "dead_time_ns"}, path)
    try:
        return DetectorSpec(
            efficiency=_num(d, "efficiency", path),
            dark_rate_cps=_num(d, "dark_rate_cps", path, default=0.0),
            jitter_ps=_num(d, "jitter_ps", path, default=0.0),
            dead_time_ns=_num(d, "dead_time_ns", path, default=0.0),
            detector_id=det_id,
        )
    except ValueError as exc:
        raise _err(path, str(exc)) from exc


def _parse_detectors(cfg: dict) -> tuple[DetectorSpec, DetectorSpec]:
    d = _require_mapping(cfg.get("detectors"), "detectors")
    _check_known(d, {"a", "b"}, "detectors")
    if "a" not in d or "b" not in d:
        raise _err("detectors", "both detectors.a and detectors.b are required")
    return (
        _parse_detector(d["a"], "detectors.a", "a"),
        _parse_detector(d["b"], "detectors.b", "b"),
    )


def _parse_tof(cfg: dict, source: SourceSpec) -> dict:
    d = _require_mapping(cfg.get("tof"), "tof")
    _check_known(
        d,
        {"wdm_min_nm", "wdm_max_nm", "wdm_bin_nm", "duration_s",
         "reference_delay_ps", "window_ns"},
        "tof",
    )
    p = dict(
        wdm_min_nm=_num(d, "wdm_min_nm", "tof"),
        wdm_max_nm=_num(d, "wdm_max_nm", "tof"),
        wdm_bin_nm=_num(d, "wdm_bin_nm", "tof", default=4.0),
        duration_s=_num(d, "duration_s", "tof", default=1.0),
        reference_delay_ps=_num(d, "reference_delay_ps", "tof", default=0.0),
        window_ns=_num(d, "window_ns", "tof", default=None, allow_none=True),
    )
    if p["wdm_max_nm"] <= p["wdm_min_nm"]:
        raise _err("tof.wdm_max_nm", "must exceed tof.wdm_min_nm")
    lo, hi = source.support_nm()
    if p["wdm_min_nm"] < lo or p["wdm_max_nm"] > hi:
        raise _err("tof", f"wdm grid lies outside the source band "
                          f"[{lo:.1f}, {hi:.1f}] nm")
    if p["duration_s"] <= 0.0:
        raise _err("tof.duration_s", "must be positive")
    return p


def _parse_interferometer(cfg: dict) -> dict:
    d = _require_mapping(cfg.get("interferometer"), "interferometer")
    _check_known(
        d,
        {"temperatures_c", "mirror", "counts_per_point", "n_freq", "wdm_split_nm"},
        "interferometer",
    )
    temps = d.get("temperatures_c")
    if (
        not isinstance(temps, list)
        or not temps
        or not all(isinstance(t, (int, float)) and not isinstance(t, bool) for t in temps)
    ):
        raise _err("interferometer.temperatures_c", "expected a non-empty number list")
    mpath = "interferometer.mirror"
    md = _require_mapping(d.get("mirror"), mpath)
    mode = _str(md, "mode", mpath, default="centered", choices={"centered", "explicit"})
    if mode == "centered":
        _check_known(md, {"mode", "half_span_um", "step_um"}, mpath)
        mirror = dict(
            mode=mode,
            half_span_um=_num(md, "half_span_um", mpath),
            step_um=_num(md, "step_um", mpath),
        )
    else:
        _check_known(md, {"mode", "min_um", "max_um", "step_um"}, mpath)
        mirror = dict(
            mode=mode,
            min_um=_num(md, "min_um", mpath),
            max_um=_num(md, "max_um", mpath),
            step_um=_num(md, "step_um", mpath),
        )
        if mirror["max_um"] <= mirror["min_um"]:
            raise _err(f"{mpath}.max_um", "must exceed mirror.min_um")
    if mirror["step_um"] <= 0.0:
        raise _err(f"{mpath}.step_um", "must be positive")
    return dict(
        temperatures_c=[float(t) for t in temps],
        mirror=mirror,
        counts_per_point=_num(d, "counts_per_point", "interferometer",
                              default=None, allow_none=True),
        n_freq=_int(d, "n_freq", "interferometer", default=1025),
        wdm_split_nm=_num(d, "wdm_split_nm", "interferometer",
                          default=None, allow_none=True),
    )


def _parse_pmd(cfg: dict) -> dict:
    d = _require_mapping(cfg.get("pmd"), "pmd")
    _check_known(
        d,
        {"delay_min_fs", "delay_max_fs", "delay_step_fs", "counts_per_point",
         "visibility", "noiseless"},
        "pmd",
    )
    p = dict(
        delay_min_fs=_num(d, "delay_min_fs", "pmd"),
        delay_max_fs=_num(d, "delay_max_fs", "pmd"),
        delay_step_fs=_num(d, "delay_step_fs", "pmd"),
        counts_per_point=_num(d, "counts_per_point", "pmd", default=1.0e4),
        visibility=_num(d, "visibility", "pmd", default=1.0),
        noiseless=_bool(d, "noiseless", "pmd"),
    )
    if p["delay_max_fs"] <= p["delay_min_fs"]:
        raise _err("pmd.delay_max_fs", "must exceed pmd.delay_min_fs")
    if p["delay_step_fs"] <= 0.0:
        raise _err("pmd.delay_step_fs", "must be positive")
    if not 0.0 <= p["visibility"] <= 1.0:
        raise _err("pmd.visibility", "must lie in [0, 1]")
    return p


def _parse_calibration(cfg: dict) -> dict:
    d = _require_mapping(cfg.get("calibration"), "calibration")
    _check_known(
        d,
        {"duration_s", "window_ns", "path_delay_a_ps", "path_delay_b_ps"},
        "calibration",
    )
    p = dict(
        duration_s=_num(d, "duration_s", "calibration", default=1.0),
        window_ns=_num(d, "window_ns", "calibration", default=1.0),
        path_delay_a_ps=_num(d, "path_delay_a_ps", "calibration", default=0.0),
        path_delay_b_ps=_num(d, "path_delay_b_ps", "calibration", default=0.0),
    )
    if p["duration_s"] <= 0.0:
        raise _err("calibration.duration_s", "must be positive")
    if p["window_ns"] <= 0.0:
        raise _err("calibration.window_ns", "must be positive")
    return p


_TOP_FIELDS = {
    "protocol", "seed", "source", "fiber", "element", "detectors",
    "tof", "interferometer", "pmd", "calibration",
}

_SECTIONS = {
    "tof": ("fiber", "detectors", "tof"),
    "interferometer": ("fiber", "interferometer"),
    "pmd": ("element", "pmd"),
    "calibrate": ("detectors", "calibration"),
}


def parse_config(cfg: dict) -> RunConfig:
    """Validate a configuration mapping into a :class:`RunConfig`."""
    cfg = _require_mapping(cfg, "config")
    _check_known(cfg, _TOP_FIELDS, "")
    protocol = _str(cfg, "protocol", "", choices=set(PROTOCOLS))
    needed = _SECTIONS[protocol]
    for section in needed:
        if section not in cfg:
            raise _err(section, f"protocol {protocol!r} requires this section")
    for section in ("fiber", "element", "detectors", "tof", "interferometer",
                    "pmd", "calibration"):
        if section in cfg and section not in needed:
            raise _err(section, f"not used by protocol {protocol!r}")
    seed = _int(cfg, "seed", "seed", default=0)
    if "source" not in cfg:
        raise _err("source", "missing required section")
    source = _parse_source(cfg["source"], "source")
    fiber = _parse_fiber(cfg["fiber"], "fiber") if "fiber" in needed else None
    element = _parse_element(cfg["element"], "element") if "element" in needed else None
    det_a = det_b = None
    if "detectors" in needed:
        det_a, det_b = _parse_detectors(cfg)
    if protocol == "tof":
        params = _parse_tof(cfg, source)
    elif protocol == "interferometer":
        params = _parse_interferometer(cfg)
    elif protocol == "pmd":
        params = _parse_pmd(cfg)
        if source.pm_type != TYPE_II:
            raise _err("source.pm_type",
                       "the pmd protocol needs an entangled (type_ii) source")
    else:
        params = _parse_calibration(cfg)
    return RunConfig(
        protocol=protocol,
        seed=seed,
        source=source,
        fiber=fiber,
        element=element,
        detector_a=det_a,
        detector_b=det_b,
        params=params,
    )


def load_config(path) -> RunConfig:
    """Parse a YAML run configuration file."""
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    if raw is None:
        raise ConfigError(f"config file {path} is empty")
    return parse_config(raw)


def config_to_dict(cfg: RunConfig) -> dict:
    """Normalized mapping form of a parsed config.

    Feeding the result back through :func:`parse_config` reproduces the
    same specs; presets are expanded, degree fields restored and
    defaults written out, so the echo is self-contained.
    """
    src = dataclasses.asdict(cfg.source)
    src["axis_angle_deg"] = math.degrees(src.pop("axis_angle_rad"))
    src["temperature_range_c"] = list(cfg.source.temperature_range_c)
    out = {"protocol": cfg.protocol, "seed": cfg.seed, "source": src}
    if cfg.fiber is not None:
        model = dataclasses.asdict(cfg.fiber.model)
        model["kind"] = (
            "sellmeier3"
            if isinstance(cfg.fiber.model, Sellmeier3Coefficients)
            else "quadratic"
        )
        out["fiber"] = {
            "length_km": cfg.fiber.length_km,
            "attenuation_db_per_km": cfg.fiber.attenuation_db_per_km,
            "model": model,
        }
    if cfg.element is not None:
        out["element"] = {
            "dgd_fs": cfg.element.dgd_fs,
            "axis_angle_deg": math.degrees(cfg.element.axis_angle_rad),
        }
    if cfg.detector_a is not None:
        out["detectors"] = {
            det.detector_id: {
                "efficiency": det.efficiency,
                "dark_rate_cps": det.dark_rate_cps,
                "jitter_ps": det.jitter_ps,
                "dead_time_ns": det.dead_time_ns,
            }
            for det in (cfg.detector_a, cfg.detector_b)
        }
    section = {"tof": "tof", "interferometer": "interferometer",
               "pmd": "pmd", "calibrate": "calibration"}[cfg.protocol]
    out[section] = {k: (list(v) if isinstance(v, tuple) else v)
                    for k, v in cfg.params.items()}
    return out

"""Irradiance/temperature profiles and scenario files.

A scenario file is INI-style text with five sections::

    [panel]        voc_n isc_n kv ki n_series ideality r_s r_sh
                   (omit the section to use the bundled reference panel)
    [bus]          v_l d_max efficiency
    [profile]      kind = constant | step | ramp | piecewise
                   segments = one "start_s g_w_m2 t_c [hold|linear]" per line
    [controller]   name = hybrid | po | inccond | frac_voc | frac_isc
                   plus numeric parameters of that controller
    [sim]          duration dt

The fourth column of a segment is only read for ``piecewise`` profiles.
"""

from __future__ import annotations

import bisect
import configparser
import hashlib
import json
import math
import re
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, Tuple

from .errors import ConfigError, OutOfRange
from .power_stage import BusParams
from .pv_model import EnvSample, PanelParams, panel_from_mapping, reference_panel

KINDS = ("constant", "step", "ramp", "piecewise")
RULES = ("hold", "linear")
MAX_STEPS = 10**7

CANONICAL_SCENARIOS = ("stc", "irradiance_step", "temperature_step", "ramp")


@dataclass(frozen=True)
class Segment:
    start: float
    g: float
    t: float
    rule: str = "hold"


@dataclass(frozen=True)
class Profile:
    """Time-indexed environment.

    ``step`` segments are left-closed: at a boundary the new value applies.
    ``ramp`` interpolates linearly between segment starts. Both hold their
    last value after the final segment. ``piecewise`` applies each segment's
    own rule toward the next one; a trailing ``linear`` segment has nothing to
    interpolate toward, so sampling past it is out of range.
    """

    kind: str
    segments: Tuple[Segment, ...]

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if not self.segments:
            raise ValueError("profile needs at least one segment")
        starts = [s.start for s in self.segments]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ValueError("segment start times must be strictly increasing")
        if any(s.g < 0 for s in self.segments):
            raise ValueError("irradiance must be >= 0")
        if any(s.rule not in RULES for s in self.segments):
            raise ValueError(f"segment rule must be one of {RULES}")

    @classmethod
    def constant(cls, g: float, t: float) -> "Profile":
        return cls("constant", (Segment(0.0, g, t),))

    @classmethod
    def step(cls, *points) -> "Profile":
        return cls("step", tuple(Segment(*pt) for pt in points))

    @classmethod
    def ramp(cls, *points) -> "Profile":
        return cls("ramp", tuple(Segment(*pt) for pt in points))

    @property
    def breakpoints(self):
        """Segment start times after t=0, where disturbances begin."""
        return [s.start for s in self.segments if s.start > 0]


def _lerp(a: Segment, b: Segment, time: float):
    w = (time - a.start) / (b.start - a.start)
    return a.g + w * (b.g - a.g), a.t + w * (b.t - a.t)


def sample(profile: Profile, time: float) -> EnvSample:
    """Environment at ``time``.

    Raises:
        OutOfRange: before the first segment, or past a trailing linear one.
    """
    segs = profile.segments
    if profile.kind == "constant":
        if time < 0:
            raise OutOfRange(f"time {time} is negative")
        return EnvSample(segs[0].g, segs[0].t, time)
    if time < segs[0].start:
        raise OutOfRange(f"time {time} precedes the first segment at {segs[0].start}")
    idx = bisect.bisect_right([s.start for s in segs], time) - 1
    cur = segs[idx]
    last = idx == len(segs) - 1
    if profile.kind == "step" or (last and profile.kind == "ramp"):
        return EnvSample(cur.g, cur.t, time)
    if profile.kind == "ramp" or cur.rule == "linear":
        if last:
            if time == cur.start:
                return EnvSample(cur.g, cur.t, time)
            raise OutOfRange(f"time {time} is past the final linear segment")
        g, t = _lerp(cur, segs[idx + 1], time)
        return EnvSample(g, t, time)
    return EnvSample(cur.g, cur.t, time)


@dataclass(frozen=True)
class ControllerSpec:
    name: str = "hybrid"
    params: Dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class Scenario:
    panel: PanelParams
    bus: BusParams
    profile: Profile
    controller: ControllerSpec = ControllerSpec()
    duration: float = 5.0
    dt: float = 0.01

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.duration / self.dt > MAX_STEPS:
            raise ValueError(f"duration/dt exceeds {MAX_STEPS} steps")

    @property
    def n_steps(self) -> int:
        # guard against 0.1/0.01 = 10.000000000000002
        return math.ceil(self.duration / self.dt - 1e-9)

    def with_controller(self, name: str, **params) -> "Scenario":
        return Scenario(self.panel, self.bus, self.profile,
                        ControllerSpec(name, dict(params)), self.duration, self.dt)

    def digest(self) -> str:
        """Stable SHA-256 over every field, used as trace provenance."""
        payload = json.dumps(asdict(self), sort_keys=True, default=repr)
        return hashlib.sha256(payload.encode()).hexdigest()


# -- scenario files ----------------------------------------------------------

_SECTIONS = ("panel", "bus", "profile", "controller", "sim")


def _key_line(text: str, section: str, key: str):
    current = None
    for n, line in enumerate(text.splitlines(), 1):
        head = re.match(r"\s*\[([^\]]+)\]", line)
        if head:
            current = head.group(1).strip()
        elif current == section and re.match(rf"\s*{re.escape(key)}\s*[=:]", line):
            return n
    return None


def _number(text, section, key, raw):
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] expects a number, got {raw!r}", key=key,
                          line=_key_line(text, section, key)) from None


def _parse_segments(text, raw):
    segs = []
    for row in (r.strip() for r in raw.splitlines()):
        if not row:
            continue
        parts = row.replace(",", " ").split()
        if len(parts) not in (3, 4):
            raise ConfigError(f"segment {row!r} needs 'start g t [rule]'", key="segments",
                              line=_key_line(text, "profile", "segments"))
        nums = [_number(text, "profile", "segments", x) for x in parts[:3]]
        segs.append(Segment(*nums, *(parts[3:])))
    return tuple(segs)


def parse_scenario(text: str) -> Scenario:
    """Parse scenario text. Every failure is reported as ConfigError."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed scenario: {exc.message if hasattr(exc, 'message') else exc}",
                          line=getattr(exc, "lineno", None)) from None
    for name in parser.sections():
        if name not in _SECTIONS:
            raise ConfigError(f"unknown section [{name}]", line=_section_line(text, name))

    def fail(exc, section, key=None):
        return ConfigError(f"[{section}] {exc}", key=key,
                           line=_key_line(text, section, key) if key else None)

    if parser.has_section("panel"):
        try:
            panel = panel_from_mapping(parser["panel"])
        except ConfigError as exc:
            if exc.key is not None:
                raise ConfigError(f"[panel] {exc.reason}", key=exc.key,
                                  line=_key_line(text, "panel", exc.key)) from None
            raise
    else:
        panel = reference_panel()

    bus_kw = {}
    if parser.has_section("bus"):
        for key, raw in parser["bus"].items():
            if key not in ("v_l", "d_max", "efficiency"):
                raise fail("unknown key", "bus", key)
            bus_kw[key] = _number(text, "bus", key, raw)
    try:
        bus = BusParams(**bus_kw)
    except ValueError as exc:
        raise fail(exc, "bus") from None

    if not parser.has_section("profile"):
        raise ConfigError("missing [profile] section")
    prof = parser["profile"]
    for key in prof:
        if key not in ("kind", "segments"):
            raise fail("unknown key", "profile", key)
    if "segments" not in prof:
        raise ConfigError("[profile] needs segments", key="segments")
    kind = prof.get("kind", "step").strip()
    if kind not in KINDS:
        raise fail(f"kind must be one of {', '.join(KINDS)}", "profile", "kind")
    try:
        profile = Profile(kind, _parse_segments(text, prof["segments"]))
    except (TypeError, ValueError) as exc:
        raise fail(exc, "profile", "segments") from None

    ctl = ControllerSpec()
    if parser.has_section("controller"):
        sect = dict(parser["controller"])
        name = sect.pop("name", "hybrid").strip()
        params = {k: _number(text, "controller", k, v) for k, v in sect.items()}
        ctl = ControllerSpec(name, params)

    sim_kw = {}
    if parser.has_section("sim"):
        for key, raw in parser["sim"].items():
            if key not in ("duration", "dt"):
                raise fail("unknown key", "sim", key)
            sim_kw[key] = _number(text, "sim", key, raw)
    try:
        return Scenario(panel, bus, profile, ctl, **sim_kw)
    except ValueError as exc:
        raise fail(exc, "sim") from None


def _section_line(text, name):
    for n, line in enumerate(text.splitlines(), 1):
        if re.match(rf"\s*\[{re.escape(name)}\]", line):
            return n
    return None


def load_scenario(path) -> Scenario:
    """Load a scenario file, or a bundled one given as ``builtin:<name>``."""
    path = str(path)
    if path.startswith("builtin:"):
        return canonical_scenario(path.split(":", 1)[1])
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc.strerror}") from None
    return parse_scenario(text)


def canonical_scenario(name: str) -> Scenario:
    if name not in CANONICAL_SCENARIOS:
        raise ConfigError(f"no bundled scenario {name!r}; choose from {', '.join(CANONICAL_SCENARIOS)}")
    res = resources.files("pvtrack").joinpath(f"data/scenarios/{name}.ini")
    return parse_scenario(res.read_text())

"""Scenario configuration: TOML loading, validation and model assembly."""

import ast
import math
import operator
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import tomli

from .constraints import ConstraintSettings, build_pyramid
from .controller import NominalGains, Reference
from .dynamics import GraspSystem, FingerModel, ObjectModel
from .errors import ConfigInvalid
from .spatial import euler_zyx_to_rot
from .surfaces import cube_face
from .zcbf import FAMILIES, BarrierSpec, ClassKappa


_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub,
           ast.Mult: operator.mul, ast.Div: operator.truediv}


def _eval_angle(text):
    """Evaluate a small arithmetic expression in ``pi`` (e.g. ``"-3*pi/2"``)."""
    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        raise ValueError(f"unsupported expression {text!r}")
    return ev(ast.parse(text, mode="eval"))


@dataclass
class FingerConfig:
    face: str
    q0: np.ndarray
    mount_position: np.ndarray = None
    mount_rotation: np.ndarray = None


@dataclass
class ScenarioConfig:
    dt: float = 1e-3
    duration: float = 15.0
    gravity: float = 9.81
    object_mass: float = 0.11
    object_edge: float = 0.2604
    object_position: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 0.25]))
    object_rpy: np.ndarray = field(default_factory=lambda: np.zeros(3))
    link_length: float = 0.3
    link_width: float = 0.05
    link_mass: float = 0.3
    tip_radius: float = 0.06
    q_min: np.ndarray = None
    q_max: np.ndarray = None
    workspace: tuple = None
    fingers: list = field(default_factory=list)
    mu: float = 0.9
    pyramid_faces: int = 8
    slip_margin: float = 1e-3
    alpha1: ClassKappa = field(default_factory=ClassKappa)
    alpha2: ClassKappa = field(default_factory=ClassKappa)
    u_min: np.ndarray = None
    u_max: np.ndarray = None
    gains: NominalGains = None
    reference: Reference = field(default_factory=Reference)
    families: tuple = FAMILIES
    source: str = "<defaults>"

    @property
    def n_steps(self):
        return int(round(self.duration / self.dt))

    def replace(self, **changes):
        data = dict(self.__dict__)
        data.update(changes)
        return ScenarioConfig(**data)

    # model assembly -------------------------------------------------------
    def build_fingers(self):
        edge = self.object_edge
        R_po = euler_zyx_to_rot(self.object_rpy[::-1])
        out = []
        for fc in self.fingers:
            if fc.mount_rotation is not None:
                pos, rot = fc.mount_position, fc.mount_rotation
            else:
                pos, rot = derive_mount(fc, self, R_po)
            out.append(FingerModel(pos, rot, self.q_min, self.q_max, self.link_length,
                                   self.link_width, self.link_mass, self.tip_radius))
        return out

    def build(self, spin=True):
        """``(system, initial_state, constraint_settings)``."""
        fingers = self.build_fingers()
        faces = [cube_face(fc.face, self.object_edge) for fc in self.fingers]
        system = GraspSystem(fingers, ObjectModel(self.object_mass, self.object_edge), faces,
                             [self.workspace] * len(fingers), self.gravity, spin)
        q0 = np.concatenate([fc.q0 for fc in self.fingers])
        R_po = euler_zyx_to_rot(self.object_rpy[::-1])
        state = system.initial_state(q0, self.object_position, R_po)
        settings = ConstraintSettings(
            build_pyramid(self.mu, self.pyramid_faces), self.slip_margin,
            np.tile(self.q_min, len(fingers)), np.tile(self.q_max, len(fingers)),
            [self.workspace] * len(fingers), BarrierSpec(self.alpha1, self.alpha2),
            self.u_min, self.u_max, tuple(self.families))
        return system, state, settings


def derive_mount(fc, cfg, R_po):
    """Mount pose putting the fingertip apex on the centre of the assigned face at ``q0``.

    The finger base sits below the contact with its first link pointing up
    and its second link pointing horizontally into the face.
    """
    face = cube_face(fc.face, cfg.object_edge)
    n_w = R_po @ face.normal
    if abs(n_w[2]) > 1e-9:
        raise ConfigInvalid(f"face {fc.face}: automatic mounts need a horizontal face normal")
    r = -n_w / np.linalg.norm(n_w)
    up = np.array([0.0, 0.0, 1.0])
    rot = np.column_stack((-r, np.cross(up, r), -up))
    probe = FingerModel(np.zeros(3), rot, cfg.q_min, cfg.q_max, cfg.link_length,
                        cfg.link_width, cfg.link_mass, cfg.tip_radius)
    tip, R_pf = probe.fingertip_pose(fc.q0)
    contact = cfg.object_position + R_po @ face.origin
    apex = tip + R_pf @ probe.chart.point(np.array([0.0, -np.pi / 2]))
    return contact - apex, rot


# loading ----------------------------------------------------------------

class _Locator:
    """Maps dotted key paths back to line numbers of the source text."""

    def __init__(self, text, source):
        self.lines = text.splitlines()
        self.source = source

    def line_of(self, section, key=None, index=None):
        header = re.compile(r"^\s*\[\[?\s*" + re.escape(section) + r"\s*\]\]?\s*$")
        start, seen = None, -1
        for i, line in enumerate(self.lines):
            if header.match(line):
                seen += 1
                if index is None or seen == index:
                    start = i
                    break
        if start is None:
            return None
        if key is None:
            return start + 1
        pat = re.compile(r"^\s*" + re.escape(key) + r"\s*=")
        for i in range(start + 1, len(self.lines)):
            if re.match(r"^\s*\[", self.lines[i]):
                break
            if pat.match(self.lines[i]):
                return i + 1
        return start + 1

    def fail(self, msg, section, key=None, index=None):
        line = self.line_of(section, key, index)
        where = f"{self.source}:{line}" if line else self.source
        name = section + (f"[{index}]" if index is not None else "") + (f".{key}" if key else "")
        raise ConfigInvalid(f"{where}: {name}: {msg}")


def _number(v):
    if isinstance(v, bool):
        raise ValueError("expected a number, got a boolean")
    if isinstance(v, (int, float)):
        return float(v)
    if isinstance(v, str):
        return _eval_angle(v)
    raise ValueError(f"expected a number, got {type(v).__name__}")


def _get(loc, table, section, key, kind="scalar", size=None, default=None, index=None,
         positive=False):
    if key not in table:
        if default is None:
            loc.fail("missing required key", section, key, index)
        return default
    raw = table[key]
    try:
        if kind == "scalar":
            val = _number(raw)
            if not math.isfinite(val):
                raise ValueError("value must be finite")
            if positive and val <= 0:
                raise ValueError("value must be positive")
            return val
        if kind == "vector":
            if not isinstance(raw, list):
                raise ValueError("expected an array")
            val = np.array([_number(v) for v in raw])
            if size is not None and val.size != size:
                raise ValueError(f"expected {size} entries, got {val.size}")
            if not np.all(np.isfinite(val)):
                raise ValueError("entries must be finite")
            return val
        if kind == "int":
            if isinstance(raw, bool) or not isinstance(raw, int):
                raise ValueError("expected an integer")
            return raw
        if kind == "str":
            if not isinstance(raw, str):
                raise ValueError("expected a string")
            return raw
    except ValueError as exc:
        loc.fail(str(exc), section, key, index)
    raise AssertionError(kind)


def _kappa(loc, table, key):
    raw = table.get(key, {"coefficient": 1.0, "power": 3})
    if not isinstance(raw, dict):
        loc.fail("expected an inline table {coefficient, power}", "barrier", key)
    try:
        coef = _number(raw.get("coefficient", 1.0))
        power = raw.get("power", 3)
        if isinstance(power, bool) or not isinstance(power, int):
            raise ValueError("power must be an integer")
        return ClassKappa(coef, power)
    except ValueError as exc:
        loc.fail(str(exc), "barrier", key)


def parse_config(text, source="<string>"):
    """Parse and validate a scenario from TOML text. Raises ConfigInvalid."""
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigInvalid(f"{source}: {exc}") from exc
    loc = _Locator(text, source)
    for name in ("simulation", "object", "hand", "contact", "gains", "reference"):
        if name not in data:
            raise ConfigInvalid(f"{source}: missing section [{name}]")

    sim, obj, hand = data["simulation"], data["object"], data["hand"]
    cfg = {}
    cfg["dt"] = _get(loc, sim, "simulation", "dt", positive=True)
    cfg["duration"] = _get(loc, sim, "simulation", "duration", default=15.0)
    if cfg["duration"] < 0:
        loc.fail("duration must be nonnegative", "simulation", "duration")
    cfg["gravity"] = _get(loc, sim, "simulation", "gravity", default=9.81)

    cfg["object_mass"] = _get(loc, obj, "object", "mass", positive=True)
    cfg["object_edge"] = _get(loc, obj, "object", "edge", positive=True)
    cfg["object_position"] = _get(loc, obj, "object", "position", "vector", 3)
    cfg["object_rpy"] = _get(loc, obj, "object", "rpy", "vector", 3, default=np.zeros(3))

    for key in ("link_length", "link_width", "link_mass", "tip_radius"):
        cfg[key] = _get(loc, hand, "hand", key, positive=True)
    cfg["q_min"] = _get(loc, hand, "hand", "q_min", "vector", 3)
    cfg["q_max"] = _get(loc, hand, "hand", "q_max", "vector", 3)
    if np.any(cfg["q_min"] >= cfg["q_max"]):
        loc.fail("every q_min entry must be below q_max", "hand", "q_max")
    ws = _get(loc, hand, "hand", "workspace", "vector", 4)
    if not (ws[0] < ws[1] and ws[2] < ws[3]):
        loc.fail("workspace box must have a nonempty interior", "hand", "workspace")
    cfg["workspace"] = tuple(ws)

    fingers = hand.get("finger", [])
    if len(fingers) < 3:
        loc.fail("at least three [[hand.finger]] entries are required", "hand")
    cfg["fingers"] = []
    for i, f in enumerate(fingers):
        sec = "hand.finger"
        face = _get(loc, f, sec, "face", "str", index=i)
        if face not in ("+x", "-x", "+y", "-y", "+z", "-z"):
            loc.fail(f"unknown cube face {face!r}", sec, "face", i)
        q0 = _get(loc, f, sec, "q0", "vector", 3, index=i)
        if np.any(q0 < cfg["q_min"]) or np.any(q0 > cfg["q_max"]):
            loc.fail("initial joint angles lie outside the joint limits", sec, "q0", i)
        fc = FingerConfig(face, q0)
        if "mount_position" in f or "mount_rotation" in f:
            fc.mount_position = _get(loc, f, sec, "mount_position", "vector", 3, index=i)
            rot = _get(loc, f, sec, "mount_rotation", "vector", 9, index=i).reshape(3, 3)
            if not np.allclose(rot.T @ rot, np.eye(3), atol=1e-9) or np.linalg.det(rot) < 0:
                loc.fail("mount_rotation must be a proper rotation (row-major)", sec,
                         "mount_rotation", i)
            fc.mount_rotation = rot
        cfg["fingers"].append(fc)

    con = data["contact"]
    cfg["mu"] = _get(loc, con, "contact", "mu", positive=True)
    cfg["pyramid_faces"] = _get(loc, con, "contact", "pyramid_faces", "int", default=8)
    if cfg["pyramid_faces"] < 3:
        loc.fail("a pyramid needs at least 3 faces", "contact", "pyramid_faces")
    cfg["slip_margin"] = _get(loc, con, "contact", "slip_margin", positive=True, default=1e-3)

    bar = data.get("barrier", {})
    cfg["alpha1"] = _kappa(loc, bar, "alpha1")
    cfg["alpha2"] = _kappa(loc, bar, "alpha2")

    act = data.get("actuator", {})
    m = 3 * len(cfg["fingers"])
    bounds = []
    for key, default in (("u_min", -20.0), ("u_max", 20.0)):
        raw = act.get(key, default)
        if isinstance(raw, list):
            val = _get(loc, act, "actuator", key, "vector", m)
        else:
            val = np.full(m, _get(loc, act, "actuator", key, default=default))
        bounds.append(val)
    if np.any(bounds[0] >= bounds[1]):
        loc.fail("u_min must be below u_max", "actuator", "u_max")
    cfg["u_min"], cfg["u_max"] = bounds

    g = data["gains"]
    try:
        cfg["gains"] = NominalGains.scalar(_get(loc, g, "gains", "kp"),
                                           _get(loc, g, "gains", "kd"),
                                           _get(loc, g, "gains", "kf"))
    except ValueError as exc:
        loc.fail(str(exc), "gains")

    ref = data["reference"]
    cfg["reference"] = Reference(_get(loc, ref, "reference", "center", "vector", 6),
                                 _get(loc, ref, "reference", "amplitude", "vector", 6),
                                 _get(loc, ref, "reference", "frequency", default=1.0))

    fam = data.get("constraints", {}).get("families", list(FAMILIES))
    if not isinstance(fam, list) or any(f not in FAMILIES for f in fam):
        loc.fail(f"families must be a subset of {list(FAMILIES)}", "constraints", "families")
    cfg["families"] = tuple(f for f in FAMILIES if f in fam)
    cfg["source"] = source
    return ScenarioConfig(**cfg)


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigInvalid(f"{path}: cannot read config ({exc.strerror})") from exc
    return parse_config(text, str(path))


def canonical_text():
    return resources.files("graspcbf").joinpath("scenarios/canonical.toml").read_text(encoding="utf-8")


def canonical_config():
    """The shipped twist-and-pull scenario."""
    return parse_config(canonical_text(), "canonical.toml")

"""Scenario parameters, measured defaults and the TOML config reader/writer.

Everything is SI internally. The config file may give facial breadths in cm,
the emission angle in degrees and droplet diameters in micrometres; these are
converted on load. The writer always emits the SI keys so that a dump/load
round trip is exact.
"""

from __future__ import annotations

import hashlib
import math
import re
import sys
from dataclasses import dataclass, field, replace

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10 only
    import tomli as tomllib

from .errors import ConfigError, InvalidParameterError, ValidationError

SEXES = ("male", "female", "average")
SETTLING_LAWS = ("paper", "derived")
PROBABILITY_FORMS = ("as_printed", "moment_consistent")

# facial anthropometry, cm: (biocular breadth, sellion-stomion length)
FACE_CM = {
    "male": (9.131, 7.57),
    "female": (8.853, 6.901),
}

# cough droplet size distribution: diameter (um) -> initial count
COUGH_DROPLETS_UM = (
    (2, 50), (4, 290), (8, 970), (16, 1600), (24, 870), (32, 420),
    (40, 240), (50, 110), (75, 140), (100, 85), (125, 48), (150, 38),
    (200, 35), (250, 29), (500, 34), (1000, 12), (2000, 2),
)

DEFAULT_X_R = 1.5


def _positive(name, value):
    if not value > 0:
        raise ValidationError(name, f"must be > 0, got {value!r}")


def _vec3(name, value):
    try:
        vec = tuple(float(v) for v in value)
    except TypeError:
        raise ValidationError(name, "must be a 3-vector") from None
    if len(vec) != 3 or not all(math.isfinite(v) for v in vec):
        raise ValidationError(name, f"must be a finite 3-vector, got {value!r}")
    return vec


@dataclass(frozen=True)
class Environment:
    rho_a: float = 1.172   # ambient air at 23 C, kg/m^3
    rho_f: float = 0.98    # exhaled air at 34 C, kg/m^3
    rho_d: float = 993.0   # droplet, kg/m^3
    mu_a: float = 19e-6    # air dynamic viscosity, kg/(m s)
    g: float = 9.81

    def __post_init__(self):
        for name in ("rho_a", "rho_f", "rho_d", "mu_a", "g"):
            _positive(f"environment.{name}", getattr(self, name))
        if not self.rho_f < self.rho_a < self.rho_d:
            raise ValidationError(
                "environment.rho_a", "densities must satisfy rho_f < rho_a < rho_d"
            )


@dataclass(frozen=True)
class Transmitter:
    position: tuple = (0.0, 1.7, 0.0)
    I0: float = 0.0131       # initial momentum, kg m/s
    F0: float = 0.0023       # net initial buoyant force, N
    theta0: float = 0.0      # emission angle, rad
    v_c0: float = 11.2       # initial cloud speed (cough), m/s
    alpha_e: float = 0.2116  # entrainment coefficient
    eta: float = 4.0 * math.pi / 3.0

    def __post_init__(self):
        object.__setattr__(self, "position", _vec3("transmitter.position", self.position))
        _positive("transmitter.I0", self.I0)
        if not self.F0 >= 0:
            raise ValidationError("transmitter.F0", f"must be >= 0, got {self.F0!r}")
        if not -math.pi / 2 < self.theta0 < math.pi / 2:
            raise ValidationError("transmitter.theta0", "must lie strictly inside (-90, 90) degrees")
        _positive("transmitter.alpha_e", self.alpha_e)
        _positive("transmitter.eta", self.eta)
        if not self.v_c0 >= 0:
            raise ValidationError("transmitter.v_c0", f"must be >= 0, got {self.v_c0!r}")


@dataclass(frozen=True)
class DropletClass:
    diameter: float      # m
    initial_count: float

    def __post_init__(self):
        _positive("droplet_class.diameter", self.diameter)
        if not self.initial_count >= 0:
            raise ValidationError("droplet_class.count", "must be >= 0")

    @property
    def volume(self):
        return math.pi * self.diameter**3 / 6.0


def receiver_radius(beta_bb, beta_ss):
    """Radius of the facial receiver disc.

    The disc diameter is the hypotenuse of the right triangle whose legs are
    the biocular breadth and the sellion-stomion length.
    """
    if not (beta_bb > 0 and beta_ss > 0):
        raise InvalidParameterError(
            f"facial dimensions must be positive, got ({beta_bb!r}, {beta_ss!r})"
        )
    return math.sqrt(beta_bb**2 + beta_ss**2) / 2.0


def face_dimensions(sex):
    """(beta_bb, beta_ss) in metres for ``male``, ``female`` or ``average``."""
    if sex == "average":
        bb = (FACE_CM["male"][0] + FACE_CM["female"][0]) / 2.0
        ss = (FACE_CM["male"][1] + FACE_CM["female"][1]) / 2.0
    elif sex in FACE_CM:
        bb, ss = FACE_CM[sex]
    else:
        raise InvalidParameterError(f"sex must be one of {SEXES}, got {sex!r}")
    return bb / 100.0, ss / 100.0


@dataclass(frozen=True)
class ReceiverGeometry:
    position: tuple
    beta_bb: float  # m
    beta_ss: float  # m

    def __post_init__(self):
        object.__setattr__(self, "position", _vec3("receiver.position", self.position))
        _positive("receiver.beta_bb", self.beta_bb)
        _positive("receiver.beta_ss", self.beta_ss)

    @classmethod
    def for_sex(cls, sex, position=(DEFAULT_X_R, 1.7, 0.0)):
        bb, ss = face_dimensions(sex)
        return cls(position=position, beta_bb=bb, beta_ss=ss)

    @property
    def r_R(self):
        return receiver_radius(self.beta_bb, self.beta_ss)

    @property
    def A_R(self):
        return math.pi * self.r_R**2


@dataclass(frozen=True)
class SimControls:
    dt: float = 0.1
    t_s: float = 10.0
    gamma: int = 0
    seed: int = 0
    settling_law: str = "paper"
    probability_form: str = "as_printed"
    stochastic: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise ValidationError("controls.dt", f"must be > 0, got {self.dt!r}")
        if not self.dt <= self.t_s:
            raise ValidationError("controls.t_s", "must be >= dt")
        if isinstance(self.gamma, bool) or int(self.gamma) != self.gamma or self.gamma < 0:
            raise ValidationError("controls.gamma", f"must be a non-negative integer, got {self.gamma!r}")
        object.__setattr__(self, "gamma", int(self.gamma))
        if isinstance(self.seed, bool) or int(self.seed) != self.seed:
            raise ValidationError("controls.seed", f"must be an integer, got {self.seed!r}")
        object.__setattr__(self, "seed", int(self.seed))
        if self.settling_law not in SETTLING_LAWS:
            raise ValidationError("controls.settling_law", f"must be one of {SETTLING_LAWS}")
        if self.probability_form not in PROBABILITY_FORMS:
            raise ValidationError("controls.probability_form", f"must be one of {PROBABILITY_FORMS}")
        if not isinstance(self.stochastic, bool):
            raise ValidationError("controls.stochastic", "must be a boolean")

    @property
    def n_steps(self):
        """Number of grid points on t = 0, dt, ..., t_s."""
        # guard against 10.0 / 0.1 == 99.99999999999999
        return int(math.floor(self.t_s / self.dt + 1e-9)) + 1


@dataclass(frozen=True)
class ScenarioConfig:
    environment: Environment = field(default_factory=Environment)
    transmitter: Transmitter = field(default_factory=Transmitter)
    receiver: ReceiverGeometry = field(default_factory=lambda: ReceiverGeometry.for_sex("average"))
    classes: tuple = ()
    controls: SimControls = field(default_factory=SimControls)

    def __post_init__(self):
        classes = tuple(self.classes)
        object.__setattr__(self, "classes", classes)
        if not classes:
            raise ValidationError("droplet_class", "at least one droplet class is required")
        diam = [c.diameter for c in classes]
        if any(b <= a for a, b in zip(diam, diam[1:])):
            raise ValidationError("droplet_class.diameter", "diameters must be strictly increasing")

    @property
    def total_initial_count(self):
        return sum(c.initial_count for c in self.classes)

    def with_receiver_x(self, x_R):
        _, y, z = self.receiver.position
        return replace(self, receiver=replace(self.receiver, position=(x_R, y, z)))

    def with_controls(self, **changes):
        return replace(self, controls=replace(self.controls, **changes))

    def with_transmitter(self, **changes):
        return replace(self, transmitter=replace(self.transmitter, **changes))

    def digest(self):
        """Short hash of the canonical serialisation."""
        return hashlib.sha256(dump_config(self).encode()).hexdigest()[:16]


def cough_classes():
    return tuple(DropletClass(d * 1e-6, float(n)) for d, n in COUGH_DROPLETS_UM)


def default_scenario(sex="average", x_R=DEFAULT_X_R):
    """Measured cough scenario with a receiver face of the given sex.

    ``x_R`` is not part of the measured set; 1.5 m is the single-run
    distance used for the trajectory illustration.
    """
    if sex not in SEXES:
        raise InvalidParameterError(f"sex must be one of {SEXES}, got {sex!r}")
    return ScenarioConfig(
        environment=Environment(),
        transmitter=Transmitter(),
        receiver=ReceiverGeometry.for_sex(sex, position=(x_R, 1.7, 0.0)),
        classes=cough_classes(),
        controls=SimControls(),
    )


# ---------------------------------------------------------------- config I/O

_SECTIONS = {
    "environment": {"rho_a", "rho_f", "rho_d", "mu_a", "g"},
    "transmitter": {"x", "y", "z", "I0", "F0", "theta0", "theta0_deg", "v_c0", "alpha_e", "eta"},
    "receiver": {"sex", "x_R", "y_R", "z_R", "beta_bb", "beta_bb_cm", "beta_ss", "beta_ss_cm"},
    "controls": {"dt", "t_s", "gamma", "seed", "settling_law", "probability_form", "stochastic"},
}
_CLASS_KEYS = {"diameter", "diameter_um", "count"}


def _number(key, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(key, f"expected a number, got {value!r}")
    return float(value)


def _integer(key, value):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(key, f"expected an integer, got {value!r}")
    return value


def _pick(section, key, name, default, unit_key=None, scale=1.0):
    """Value for ``name`` from ``section``; ``unit_key`` is an alternative spelling in other units."""
    full = f"{key}.{name}"
    if unit_key is not None and unit_key in section:
        if name in section:
            raise ValidationError(full, f"give either {name} or {unit_key}, not both")
        return _number(f"{key}.{unit_key}", section[unit_key]) * scale
    if name in section:
        return _number(full, section[name])
    return default


def load_config(text):
    """Parse a TOML scenario document; missing fields take the averaged-face defaults."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"malformed config: {exc}", line=int(m.group(1)) if m else None) from None
    return config_from_dict(doc)


def load_config_file(path):
    with open(path, encoding="utf-8") as fh:
        return load_config(fh.read())


def config_from_dict(doc):
    for key, value in doc.items():
        if key == "droplet_class":
            continue
        if key not in _SECTIONS:
            raise ConfigError("unknown section", field=key)
        if not isinstance(value, dict):
            raise ConfigError("expected a table of keys", field=key)
        unknown = set(value) - _SECTIONS[key]
        if unknown:
            raise ConfigError("unknown key", field=f"{key}.{sorted(unknown)[0]}")

    env_d = doc.get("environment", {})
    tx_d = doc.get("transmitter", {})
    rx_d = doc.get("receiver", {})
    ctl_d = doc.get("controls", {})

    base = Environment()
    env = Environment(**{
        n: _pick(env_d, "environment", n, getattr(base, n)) for n in ("rho_a", "rho_f", "rho_d", "mu_a", "g")
    })

    tx0 = Transmitter()
    pos = tuple(_pick(tx_d, "transmitter", n, tx0.position[i]) for i, n in enumerate("xyz"))
    tx = Transmitter(
        position=pos,
        I0=_pick(tx_d, "transmitter", "I0", tx0.I0),
        F0=_pick(tx_d, "transmitter", "F0", tx0.F0),
        theta0=_pick(tx_d, "transmitter", "theta0", tx0.theta0, "theta0_deg", math.pi / 180.0),
        v_c0=_pick(tx_d, "transmitter", "v_c0", tx0.v_c0),
        alpha_e=_pick(tx_d, "transmitter", "alpha_e", tx0.alpha_e),
        eta=_pick(tx_d, "transmitter", "eta", tx0.eta),
    )

    sex = rx_d.get("sex", "average")
    if sex not in SEXES:
        raise ValidationError("receiver.sex", f"must be one of {SEXES}, got {sex!r}")
    bb0, ss0 = face_dimensions(sex)
    rx = ReceiverGeometry(
        position=(
            _pick(rx_d, "receiver", "x_R", DEFAULT_X_R),
            _pick(rx_d, "receiver", "y_R", 1.7),
            _pick(rx_d, "receiver", "z_R", 0.0),
        ),
        beta_bb=_pick(rx_d, "receiver", "beta_bb", bb0, "beta_bb_cm", 0.01),
        beta_ss=_pick(rx_d, "receiver", "beta_ss", ss0, "beta_ss_cm", 0.01),
    )

    c0 = SimControls()
    ctl = SimControls(
        dt=_pick(ctl_d, "controls", "dt", c0.dt),
        t_s=_pick(ctl_d, "controls", "t_s", c0.t_s),
        gamma=_integer("controls.gamma", ctl_d["gamma"]) if "gamma" in ctl_d else c0.gamma,
        seed=_integer("controls.seed", ctl_d["seed"]) if "seed" in ctl_d else c0.seed,
        settling_law=ctl_d.get("settling_law", c0.settling_law),
        probability_form=ctl_d.get("probability_form", c0.probability_form),
        stochastic=ctl_d.get("stochastic", c0.stochastic),
    )

    if "droplet_class" in doc:
        entries = doc["droplet_class"]
        if not isinstance(entries, list) or not all(isinstance(e, dict) for e in entries):
            raise ConfigError("droplet_class must be an array of tables", field="droplet_class")
        classes = []
        for i, entry in enumerate(entries):
            unknown = set(entry) - _CLASS_KEYS
            if unknown:
                raise ConfigError("unknown key", field=f"droplet_class[{i}].{sorted(unknown)[0]}")
            d = _pick(entry, f"droplet_class[{i}]", "diameter", None, "diameter_um", 1e-6)
            if d is None:
                raise ValidationError(f"droplet_class[{i}].diameter", "missing diameter")
            if "count" not in entry:
                raise ValidationError(f"droplet_class[{i}].count", "missing count")
            classes.append(DropletClass(d, _number(f"droplet_class[{i}].count", entry["count"])))
        classes = tuple(classes)
    else:
        classes = cough_classes()

    return ScenarioConfig(environment=env, transmitter=tx, receiver=rx, classes=classes, controls=ctl)


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return f'"{value}"'
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def dump_config(cfg):
    """Serialise to the TOML schema using SI keys only (exact round trip)."""
    env, tx, rx, ctl = cfg.environment, cfg.transmitter, cfg.receiver, cfg.controls
    rows = [
        ("environment.rho_a", env.rho_a), ("environment.rho_f", env.rho_f),
        ("environment.rho_d", env.rho_d), ("environment.mu_a", env.mu_a), ("environment.g", env.g),
        ("transmitter.x", tx.position[0]), ("transmitter.y", tx.position[1]),
        ("transmitter.z", tx.position[2]), ("transmitter.I0", tx.I0), ("transmitter.F0", tx.F0),
        ("transmitter.theta0", tx.theta0), ("transmitter.v_c0", tx.v_c0),
        ("transmitter.alpha_e", tx.alpha_e), ("transmitter.eta", tx.eta),
        ("receiver.x_R", rx.position[0]), ("receiver.y_R", rx.position[1]),
        ("receiver.z_R", rx.position[2]), ("receiver.beta_bb", rx.beta_bb),
        ("receiver.beta_ss", rx.beta_ss),
        ("controls.dt", ctl.dt), ("controls.t_s", ctl.t_s), ("controls.gamma", ctl.gamma),
        ("controls.seed", ctl.seed), ("controls.settling_law", ctl.settling_law),
        ("controls.probability_form", ctl.probability_form), ("controls.stochastic", ctl.stochastic),
    ]
    lines = [f"{k} = {_fmt(v)}" for k, v in rows]
    for c in cfg.classes:
        lines += ["", "[[droplet_class]]", f"diameter = {_fmt(c.diameter)}", f"count = {_fmt(c.initial_count)}"]
    return "\n".join(lines) + "\n"

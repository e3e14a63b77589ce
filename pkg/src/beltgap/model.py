"""Parameter types, validation, and nondimensionalization.

The physical system is a taut string translating axially at constant speed
while resting on an elastic foundation whose stiffness varies harmonically
along the axis.  Every solver in this package works with the dimensionless
form of that problem: axial speed ``v`` (the critical transport speed is 1),
mean foundation stiffness ``s``, stiffness modulation depth ``sigma``, and a
harmonic truncation order ``M`` (harmonics m = -M..M enter the coupling
matrix).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path


class BeltgapError(Exception):
    """Base class for all solver errors."""


class ParameterError(BeltgapError, ValueError):
    """Invalid or out-of-domain parameters (CLI exit code 2)."""


class SupercriticalSpeedError(ParameterError):
    """Axial speed at or above the critical transport speed."""


class NumericalError(BeltgapError, RuntimeError):
    """Numerical failure inside a solver (CLI exit code 3)."""


class DegeneracyError(NumericalError):
    """A computation hit a spectral degeneracy it cannot resolve."""


class OffSurfaceError(ParameterError):
    """An (omega, k) pair does not lie on the dispersion surface."""


#: Default harmonic truncation order (9 harmonics).  Gaps up to the fourth
#: are resolved with margin, since at most 2M+1 gaps can open.
DEFAULT_TRUNCATION = 4


def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ParameterError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class PhysicalParams:
    """Dimensional description of the string-foundation system.

    Attributes
    ----------
    linear_density : mass per unit length, > 0
    tension : axial tension force, > 0
    base_stiffness : mean foundation stiffness, force / length^2, >= 0
    sigma : relative modulation depth of the stiffness, >= 0
    period : spatial period of the stiffness modulation, > 0
    speed : axial transport speed, >= 0
    """

    linear_density: float
    tension: float
    base_stiffness: float
    sigma: float
    period: float
    speed: float

    def __post_init__(self):
        for name in ("linear_density", "tension", "base_stiffness",
                     "sigma", "period", "speed"):
            object.__setattr__(self, name, _require_finite(name, getattr(self, name)))
        if self.linear_density <= 0:
            raise ParameterError("linear_density must be positive")
        if self.tension <= 0:
            raise ParameterError("tension must be positive")
        if self.period <= 0:
            raise ParameterError("period must be positive")
        if self.base_stiffness < 0:
            raise ParameterError("base_stiffness must be nonnegative")
        if self.sigma < 0:
            raise ParameterError("sigma must be nonnegative")
        if self.speed < 0:
            raise ParameterError("speed must be nonnegative")

    @property
    def reciprocal_density(self) -> float:
        """Spatial frequency of the modulation, 2 pi / period."""
        return 2.0 * math.pi / self.period

    @property
    def wave_speed(self) -> float:
        """Transverse wave speed sqrt(tension / linear_density)."""
        return math.sqrt(self.tension / self.linear_density)


@dataclass(frozen=True)
class BeltParams:
    """Dimensionless system state shared by all solvers.

    Construction only enforces structural sanity (finite floats, integer
    M >= 0) so that invalid states can still be inspected by `validate`;
    solvers reject invalid states through `require_valid`.
    """

    v: float
    s: float
    sigma: float
    M: int = DEFAULT_TRUNCATION

    def __post_init__(self):
        for name in ("v", "s", "sigma"):
            object.__setattr__(self, name, _require_finite(name, getattr(self, name)))
        m = self.M
        if isinstance(m, bool) or int(m) != m:
            raise ParameterError(f"truncation order M must be an integer, got {m!r}")
        if int(m) < 0:
            raise ParameterError(f"truncation order M must be nonnegative, got {m}")
        object.__setattr__(self, "M", int(m))

    @property
    def n_harmonics(self) -> int:
        """Number of harmonics kept in the coupling matrix, 2M + 1."""
        return 2 * self.M + 1


@dataclass(frozen=True)
class FrequencyPoint:
    """A point (omega, k) with k inside the first Brillouin zone."""

    omega: float
    k: float

    def __post_init__(self):
        object.__setattr__(self, "omega", _require_finite("omega", self.omega))
        object.__setattr__(self, "k", _require_finite("k", self.k))
        if self.omega < 0:
            raise ParameterError(f"omega must be nonnegative, got {self.omega}")
        if not -0.5 <= self.k <= 0.5:
            raise ParameterError(
                f"k must lie in the first Brillouin zone [-0.5, 0.5], got {self.k}")


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of `validate`: hard violations plus soft warnings."""

    hard_violations: tuple[str, ...]
    warnings: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.hard_violations


def validate(bp: BeltParams) -> ValidationReport:
    """Check a parameter set, reporting instead of raising.

    Hard violations make the dispersion problem ill-posed (the solvers
    refuse to run); warnings flag regimes where the harmonic truncation
    argument weakens but the matrix method still operates.
    """
    hard = []
    soft = []
    if bp.v < 0:
        hard.append(f"axial speed v must be nonnegative, got {bp.v}")
    elif bp.v >= 1:
        hard.append(
            f"axial speed v = {bp.v} is at or above the critical speed 1 "
            "(subcritical transport required)")
    if bp.s < 0:
        hard.append(f"foundation stiffness s must be nonnegative, got {bp.s}")
    if bp.sigma < 0:
        hard.append(f"stiffness modulation sigma must be nonnegative, got {bp.sigma}")
    if bp.s >= 1:
        soft.append(
            f"s = {bp.s} >= 1: harmonic truncation is only justified for s < 1; "
            "results may need a larger M")
    if bp.sigma >= 1:
        soft.append(
            f"sigma = {bp.sigma} >= 1: harmonic truncation is only justified for "
            "sigma < 1; results may need a larger M")
    if bp.M == 0 and bp.sigma > 0:
        soft.append(
            "M = 0 with sigma > 0: a single harmonic cannot see the modulation "
            "coupling; gaps beyond the first are invisible")
    return ValidationReport(tuple(hard), tuple(soft))


def require_valid(bp: BeltParams) -> None:
    """Raise ParameterError when `bp` has hard validation violations."""
    report = validate(bp)
    if not report.ok:
        raise ParameterError("; ".join(report.hard_violations))


def nondimensionalize(p: PhysicalParams, M: int = DEFAULT_TRUNCATION) -> BeltParams:
    """Map dimensional parameters to the dimensionless set.

    v = speed / sqrt(tension / density) and
    s = base_stiffness / (phi^2 tension) with phi = 2 pi / period, i.e.
    s = base_stiffness * period^2 / (4 pi^2 tension).  sigma and M pass
    through unchanged.
    """
    c = p.wave_speed
    v = p.speed / c
    if v >= 1:
        raise SupercriticalSpeedError(
            f"speed {p.speed} is supercritical: wave speed is {c} "
            "(v = V/c must be < 1)")
    phi = p.reciprocal_density
    s = p.base_stiffness / (phi * phi * p.tension)
    return BeltParams(v=v, s=s, sigma=p.sigma, M=M)


# --- configuration files ---------------------------------------------------

#: Keys accepted for the dimensionless parameter set.
NONDIMENSIONAL_KEYS = ("v", "s", "sigma", "M")
#: Keys accepted for the dimensional parameter set ("sigma" is shared).
PHYSICAL_KEYS = ("rho", "tension", "stiffness", "sigma", "period", "speed")


def read_config(path: str | Path) -> dict[str, float]:
    """Read parameters from a config file.

    Two formats are accepted: plain text with one ``key = value`` per line
    (``#`` starts a comment), or a JSON document as emitted by the CLI, in
    which case known parameter keys are pulled from its ``metadata`` block.
    """
    text = Path(path).read_text()
    known = set(NONDIMENSIONAL_KEYS) | set(PHYSICAL_KEYS)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        doc = None
    out: dict[str, float] = {}
    if isinstance(doc, dict):
        meta = doc.get("metadata", doc)
        if not isinstance(meta, dict):
            raise ParameterError(f"config {path}: JSON metadata block is not an object")
        for key, value in meta.items():
            if key in known:
                out[key] = float(value)
        return out
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"config {path}:{lineno}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in known:
            raise ParameterError(
                f"config {path}:{lineno}: unknown key {key!r} "
                f"(expected one of {sorted(known)})")
        try:
            out[key] = float(value.strip())
        except ValueError as exc:
            raise ParameterError(f"config {path}:{lineno}: bad value for {key}: {value.strip()!r}") from exc
    return out


def belt_params_from_mapping(mapping: dict[str, float]) -> BeltParams:
    """Build BeltParams from a config mapping.

    If any dimensional key (other than the shared "sigma") is present, all
    six must be, and the set is nondimensionalized; otherwise the
    dimensionless keys are used with defaults v = s = sigma = 0, M = 4.
    """
    physical_only = set(PHYSICAL_KEYS) - {"sigma"}
    if physical_only & mapping.keys():
        missing = [k for k in PHYSICAL_KEYS if k not in mapping]
        if missing:
            raise ParameterError(
                f"physical parameter set incomplete: missing {missing}")
        p = PhysicalParams(
            linear_density=mapping["rho"],
            tension=mapping["tension"],
            base_stiffness=mapping["stiffness"],
            sigma=mapping["sigma"],
            period=mapping["period"],
            speed=mapping["speed"],
        )
        return nondimensionalize(p, M=int(mapping.get("M", DEFAULT_TRUNCATION)))
    return BeltParams(
        v=mapping.get("v", 0.0),
        s=mapping.get("s", 0.0),
        sigma=mapping.get("sigma", 0.0),
        M=int(mapping.get("M", DEFAULT_TRUNCATION)),
    )

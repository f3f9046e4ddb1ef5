from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple
import math
import re

from ..burnup.scenario import parse_duration, parse_segments
from ..nuclear_data import MalformedIdentityError, NuclideId, as_identity

MAX_SEED = 2 ** 64 - 1

REQUIRED_SECTIONS: Dict[str, Tuple[str, ...]] = {
    'chain': ('target', 'reactor'),
    'separation': ('separation',),
    'ramsey': ('clock', 'ramsey'),
    'campaign': ('clock', 'ramsey', 'campaign'),
    'jumps': ('ladder',),
}

_HEADER = re.compile(r'^\[([A-Za-z_]+)\]')


class ScenarioError(ValueError):
    """Every problem found in a scenario, not only the first"""

    def __init__(self, errors: List[str]):
        self.errors = list(errors)
        super().__init__('\n'.join(self.errors))


# --- value converters; each raises ValueError with a short reason ----------

def _float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ValueError(f"not a number: {text!r}") from None
    if not math.isfinite(value):
        raise ValueError(f"must be finite, got {text}")
    return value


def _positive(text: str) -> float:
    value = _float(text)
    if value <= 0:
        raise ValueError(f"must be positive, got {text}")
    return value


def _non_negative(text: str) -> float:
    value = _float(text)
    if value < 0:
        raise ValueError(f"must be non-negative, got {text}")
    return value


def _fraction(text: str) -> float:
    value = _float(text)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"must be in [0, 1], got {text}")
    return value


def _open_fraction(text: str) -> float:
    value = _float(text)
    if not 0.0 < value < 1.0:
        raise ValueError(f"must be in (0, 1), got {text}")
    return value


def _recovery(text: str) -> float:
    value = _float(text)
    if not 0.0 < value <= 1.0:
        raise ValueError(f"must be in (0, 1], got {text}")
    return value


def _at_least_one(text: str) -> float:
    value = _float(text)
    if value < 1.0:
        raise ValueError(f"must be >= 1, got {text}")
    return value


def _integer(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        pass
    # '2.5e6' style counts
    try:
        value = float(text)
    except ValueError:
        raise ValueError(f"not an integer: {text!r}") from None
    if not math.isfinite(value) or not value.is_integer():
        raise ValueError(f"not an integer: {text!r}")
    return int(value)


def _int_at_least(minimum: int) -> Callable[[str], int]:
    def convert(text: str) -> int:
        value = _integer(text)
        if value < minimum:
            raise ValueError(f"must be >= {minimum}, got {text}")
        return value
    return convert


def _seed(text: str) -> int:
    value = _integer(text)
    if not 0 <= value <= MAX_SEED:
        raise ValueError(f"must be an unsigned 64-bit integer, got {text}")
    return value


def _duration(text: str) -> float:
    value = parse_duration(text)
    if value <= 0:
        raise ValueError(f"must be a positive duration, got {text}")
    return value


def _duration_non_negative(text: str) -> float:
    value = parse_duration(text)
    if value < 0:
        raise ValueError(f"must be a non-negative duration, got {text}")
    return value


def _nuclide(text: str) -> NuclideId:
    try:
        return as_identity(text)
    except MalformedIdentityError as e:
        raise ValueError(str(e)) from None


def _text(text: str) -> str:
    return text


def _boolean(text: str) -> bool:
    lowered = text.lower()
    if lowered in ('true', 'yes', '1', 'on'):
        return True
    if lowered in ('false', 'no', '0', 'off'):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _float_list(item: Callable[[str], float]) -> Callable[[str], Tuple[float, ...]]:
    def convert(text: str) -> Tuple[float, ...]:
        values = tuple(item(part) for part in text.split(',') if part.strip())
        if not values:
            raise ValueError("empty list")
        return values
    return convert


def _fraction_map(text: str) -> Dict[NuclideId, float]:
    """'Sr-87:0.07,Sr-86:0.93' -> {Sr-87: 0.07, Sr-86: 0.93}"""
    result: Dict[NuclideId, float] = {}
    for part in text.split(','):
        if not part.strip():
            continue
        name, sep, value = part.partition(':')
        if not sep:
            raise ValueError(f"expected <nuclide>:<fraction>, got {part!r}")
        identity = _nuclide(name.strip())
        if identity in result:
            raise ValueError(f"{name.strip()} listed twice")
        result[identity] = _fraction(value.strip())
    if not result:
        raise ValueError("empty nuclide list")
    return result


def _choice(*options: str) -> Callable[[str], str]:
    def convert(text: str) -> str:
        if text not in options:
            raise ValueError(f"must be one of {', '.join(options)}, got {text!r}")
        return text
    return convert


@dataclass(frozen=True)
class Key:
    convert: Callable[[str], Any]
    required: bool = False


SCHEMA: Dict[str, Dict[str, Key]] = {
    'target': {
        'nuclide': Key(_nuclide, True),
        'mass_g': Key(_positive, True),
        'enrichment': Key(_fraction),
        'impurities': Key(_fraction_map),
        'depth': Key(_int_at_least(0)),
    },
    'reactor': {
        'flux': Key(_non_negative),
        'duration': Key(_duration_non_negative),
        'segments': Key(_text),
    },
    'output': {
        'seed': Key(_seed),
        'out': Key(_text),
        'grid_points': Key(_int_at_least(1)),
        'product': Key(_nuclide),
        'negligible_threshold': Key(_positive),
        'intermediate': Key(_nuclide),
    },
    'separation': {
        'stages': Key(_float_list(_at_least_one), True),
        'recovery': Key(_float_list(_recovery)),
        'composition': Key(_fraction_map, True),
        'product': Key(_nuclide, True),
        'wavelengths': Key(_float_list(_positive)),
        'target_suppression': Key(_at_least_one),
    },
    'clock': {
        'nuclide': Key(_nuclide, True),
        'nu0_hz': Key(_positive, True),
        'f_lower': Key(_int_at_least(0), True),
        'f_upper': Key(_int_at_least(1), True),
        'pump_nm': Key(_positive),
        'detect_nm': Key(_positive),
        'label': Key(_text),
    },
    'ramsey': {
        'free': Key(_duration, True),
        'pulse': Key(_duration, True),
        'shots': Key(_int_at_least(1), True),
        'rabi_rad_s': Key(_positive),
        'bright_mean': Key(_positive),
        'dark_mean': Key(_non_negative),
        'threshold': Key(_int_at_least(1)),
        'points': Key(_int_at_least(5)),
        'span': Key(_open_fraction),
        'offset': Key(_float),
        'analytic': Key(_boolean),
        'target_sigma': Key(_positive),
        'trials': Key(_int_at_least(1)),
    },
    'drift': {
        'kind': Key(_choice('none', 'relaxation', 'predecay'), True),
        'amplitude': Key(_float),
        'tau': Key(_duration),
        'kappa_s': Key(_positive),
        'decay_time': Key(_duration),
    },
    'campaign': {
        'ions_new': Key(_int_at_least(2)),
        'ions_natural': Key(_int_at_least(2)),
        'age_new': Key(_duration_non_negative),
        'age_natural': Key(_duration_non_negative),
        'epochs': Key(_int_at_least(1)),
        'epoch_spacing': Key(_duration_non_negative),
        'injected_offset': Key(_float),
        'alpha': Key(_open_fraction),
        'trap_new': Key(_text),
        'trap_natural': Key(_text),
        'trials': Key(_int_at_least(1)),
    },
    'ladder': {
        'lifetime_e1': Key(_duration, True),
        'lifetime_e2': Key(_duration, True),
        'probe_interval': Key(_duration, True),
        'perturbation': Key(_fraction),
        'cycling_rate': Key(_positive),
        'efficiency': Key(_recovery),
        'window': Key(_duration),
        'dark_mean': Key(_non_negative),
        'threshold': Key(_int_at_least(1)),
        'beta': Key(_float),
        'probe_sigma': Key(_positive),
        'horizon': Key(_duration),
        'hazard_slope': Key(_non_negative),
        'zeno_budget': Key(_positive),
        'nu2_hz': Key(_positive),
        'runs': Key(_int_at_least(1)),
        'resamples': Key(_int_at_least(1)),
        'label': Key(_text),
    },
}


@dataclass(frozen=True)
class ScenarioDocument:
    sections: Mapping[str, Mapping[str, Any]]
    text: str = ''
    name: str = ''
    # line number of each section header, for messages
    lines: Mapping[str, int] = field(default_factory=dict, compare=False)

    def has(self, section: str) -> bool:
        return section in self.sections

    def section(self, name: str) -> Mapping[str, Any]:
        return self.sections.get(name, {})

    def get(self, section: str, key: str, default: Any = None) -> Any:
        return self.section(section).get(key, default)

    @property
    def seed(self) -> Optional[int]:
        return self.get('output', 'seed')

    @property
    def out(self) -> Optional[str]:
        return self.get('output', 'out')

    def missing_sections(self, subcommand: str) -> List[str]:
        return [name for name in REQUIRED_SECTIONS.get(subcommand, ()) if name not in self.sections]

    def require(self, subcommand: str):
        """Raise ScenarioError unless every section the subcommand needs is present"""
        errors = _missing_section_errors(self, subcommand)
        if errors:
            raise ScenarioError(errors)


def _missing_section_errors(document: ScenarioDocument, subcommand: str) -> List[str]:
    missing = document.missing_sections(subcommand)
    if not missing:
        return []
    needed = ' '.join(f"[{name}]" for name in REQUIRED_SECTIONS[subcommand])
    return [f"missing section [{name}]: {subcommand} needs {needed}" for name in missing]


def _cross_checks(sections: Dict[str, Dict[str, Any]]) -> List[str]:
    """Rules spanning several keys of one section"""
    errors = []
    reactor = sections.get('reactor')
    if reactor is not None:
        if 'segments' in reactor:
            if 'duration' in reactor:
                errors.append("reactor: give either duration or segments, not both")
            try:
                reactor['segments'] = parse_segments(reactor['segments'], reactor.get('flux'))
                if not reactor['segments']:
                    errors.append("reactor.segments: no segments given")
            except ValueError as e:
                errors.append(f"reactor.segments: {e}")
        else:
            for key in ('flux', 'duration'):
                if key not in reactor:
                    errors.append(f"reactor.{key}: required key missing (or give segments)")

    separation = sections.get('separation')
    if separation is not None and 'recovery' in separation and 'stages' in separation:
        if len(separation['recovery']) not in (1, len(separation['stages'])):
            errors.append(f"separation.recovery: expected 1 or {len(separation['stages'])} values, "
                          f"got {len(separation['recovery'])}")

    clock = sections.get('clock')
    if clock is not None and 'f_lower' in clock and 'f_upper' in clock:
        if clock['f_upper'] != clock['f_lower'] + 1:
            errors.append(f"clock.f_upper: must equal f_lower + 1, got {clock['f_lower']}->{clock['f_upper']}")

    ramsey = sections.get('ramsey')
    if ramsey is not None and ('bright_mean' in ramsey) != ('dark_mean' in ramsey):
        errors.append("ramsey: bright_mean and dark_mean go together")

    drift = sections.get('drift')
    if drift is not None:
        needs = {'relaxation': ('amplitude', 'tau'), 'predecay': ('kappa_s',)}.get(drift.get('kind'), ())
        for key in needs:
            if key not in drift:
                errors.append(f"drift.{key}: required for kind={drift['kind']}")

    ladder = sections.get('ladder')
    if ladder is not None and 'lifetime_e1' in ladder and 'lifetime_e2' in ladder:
        if not ladder['lifetime_e1'] > ladder['lifetime_e2']:
            errors.append("ladder.lifetime_e2: must be shorter than lifetime_e1")
    return errors


def parse_scenario(text: str, subcommand: Optional[str] = None, name: str = '') -> ScenarioDocument:
    """Parse a sectioned key=value scenario, collecting every error before raising.

    Lines hold an optional ``[section]`` header followed by whitespace-separated
    ``key=value`` pairs; ``#`` starts a comment. Unknown sections and keys are
    errors. With a subcommand, its required sections are checked as well.
    """
    errors: List[str] = []
    raw: Dict[str, Dict[str, Tuple[str, int]]] = {}
    lines: Dict[str, int] = {}
    current: Optional[str] = None

    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split('#', 1)[0].strip()
        if not body:
            continue
        header = _HEADER.match(body)
        if header:
            current = header.group(1)
            body = body[header.end():].strip()
            if current not in SCHEMA:
                errors.append(f"line {lineno}: unknown section [{current}]")
            elif current in raw:
                errors.append(f"line {lineno}: section [{current}] repeated (first at line {lines[current]})")
            else:
                raw[current] = {}
                lines[current] = lineno
        elif body.startswith('['):
            errors.append(f"line {lineno}: malformed section header {body.split()[0]!r}")
            continue
        for token in body.split():
            key, sep, value = token.partition('=')
            if not sep or not key or not value:
                errors.append(f"line {lineno}: expected key=value, got {token!r}")
                continue
            if current is None:
                errors.append(f"line {lineno}: {key} appears before any section")
                continue
            if current not in SCHEMA:
                continue
            if key not in SCHEMA[current]:
                errors.append(f"line {lineno}: unknown key {current}.{key}")
                continue
            if key in raw[current]:
                errors.append(f"line {lineno}: {current}.{key} repeated (first at line {raw[current][key][1]})")
                continue
            raw[current][key] = (value, lineno)

    sections: Dict[str, Dict[str, Any]] = {}
    for section, values in raw.items():
        typed: Dict[str, Any] = {}
        for key, (value, lineno) in values.items():
            try:
                typed[key] = SCHEMA[section][key].convert(value)
            except ValueError as e:
                errors.append(f"line {lineno}: {section}.{key}: {e}")
        for key, spec in SCHEMA[section].items():
            if spec.required and key not in values:
                errors.append(f"line {lines[section]}: {section}.{key}: required key missing")
        sections[section] = typed
    errors.extend(_cross_checks(sections))

    document = ScenarioDocument(sections=sections, text=text, name=name, lines=lines)
    if subcommand is not None:
        errors.extend(_missing_section_errors(document, subcommand))
    elif not raw and not errors:
        needs = '; '.join(f"{command} needs " + ' '.join(f"[{s}]" for s in required)
                          for command, required in REQUIRED_SECTIONS.items())
        errors.append(f"missing section: scenario defines no sections ({needs})")
    if errors:
        raise ScenarioError(errors)
    return document

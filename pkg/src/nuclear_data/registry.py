from fractions import Fraction
from pathlib import Path
from types import MappingProxyType
from typing import Dict, Iterable, Iterator, List, Optional, Tuple, Union
import logging
import math
import shlex

from .nuclide import (
    STABLE, CaptureReaction, DecayBranch, DecayMode, MalformedIdentityError,
    Nuclide, NuclideId, Violation, as_identity, parse_name,
)

DEFAULT_DATA_FILE = Path(__file__).resolve().parent / 'data' / 'nuclides.dat'

BRANCHING_TOLERANCE = 1e-9

TIME_UNITS = {
    'us': 1e-6,
    'ms': 1e-3,
    's': 1.0,
    'm': 60.0,
    'h': 3600.0,
    'd': 86400.0,
    'y': 365.25 * 86400.0,
}

IdentityLike = Union[NuclideId, Tuple[int, int, bool], str]


class DataFileError(ValueError):
    """Syntax or content error in a nuclear data document"""

    def __init__(self, message: str, line: int, column: int = 1, origin: str = '<string>'):
        self.line = line
        self.column = column
        self.origin = origin
        self.reason = message
        super().__init__(f"{origin}:{line}:{column}: {message}")


class NuclideNotFoundError(LookupError):
    """Raised when a well-formed identity has no entry in the registry"""


class NuclideRegistry:
    """Immutable keyed collection of nuclides and capture reactions"""

    def __init__(self,
                 nuclides: Iterable[Nuclide] = (),
                 captures: Iterable[CaptureReaction] = (),
                 terminals: Iterable[NuclideId] = ()):
        by_id: Dict[NuclideId, Nuclide] = {}
        for nuclide in nuclides:
            if nuclide.identity in by_id:
                raise ValueError(f"Duplicate nuclide key: {nuclide.name}")
            by_id[nuclide.identity] = nuclide
        by_key: Dict[Tuple[NuclideId, NuclideId], CaptureReaction] = {}
        for capture in captures:
            if capture.key in by_key:
                raise ValueError(f"Duplicate capture: {capture.target} -> {capture.product}")
            by_key[capture.key] = capture
        self._nuclides = MappingProxyType(dict(sorted(by_id.items())))
        self._captures = MappingProxyType(dict(sorted(by_key.items())))
        self._terminals = frozenset(terminals)

    @property
    def nuclides(self) -> Tuple[Nuclide, ...]:
        return tuple(self._nuclides.values())

    @property
    def captures(self) -> Tuple[CaptureReaction, ...]:
        return tuple(self._captures.values())

    @property
    def terminals(self) -> frozenset:
        return self._terminals

    def lookup(self, identity: IdentityLike) -> Nuclide:
        """Return the unique entry for an identity or symbol name"""
        key = as_identity(identity)
        try:
            return self._nuclides[key]
        except KeyError:
            raise NuclideNotFoundError(f"Nuclide not in registry: {key.name} {tuple(key)}") from None

    def captures_from(self, target: IdentityLike) -> Tuple[CaptureReaction, ...]:
        key = as_identity(target)
        return tuple(c for c in self._captures.values() if c.target == key)

    def is_terminal(self, identity: IdentityLike) -> bool:
        return as_identity(identity) in self._terminals

    def resolvable(self, identity: NuclideId) -> bool:
        return identity in self._nuclides or identity in self._terminals

    def with_cross_section(self, target: IdentityLike, product: IdentityLike, sigma_barns: float,
                           provenance: str = 'override') -> 'NuclideRegistry':
        """Copy of the registry with one capture cross section replaced"""
        key = (as_identity(target), as_identity(product))
        if key not in self._captures:
            raise NuclideNotFoundError(f"No capture {key[0]} -> {key[1]} in registry")
        if sigma_barns <= 0:
            raise ValueError(f"Cross section must be positive, got {sigma_barns}")
        old = self._captures[key]
        replaced = CaptureReaction(old.target, old.product, sigma_barns, old.ground_fraction, provenance)
        captures = [replaced if c.key == key else c for c in self._captures.values()]
        return NuclideRegistry(self._nuclides.values(), captures, self._terminals)

    def __contains__(self, identity: object) -> bool:
        try:
            return as_identity(identity) in self._nuclides
        except MalformedIdentityError:
            return False

    def __iter__(self) -> Iterator[Nuclide]:
        return iter(self._nuclides.values())

    def __len__(self) -> int:
        return len(self._nuclides)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NuclideRegistry):
            return NotImplemented
        return (dict(self._nuclides) == dict(other._nuclides)
                and dict(self._captures) == dict(other._captures)
                and self._terminals == other._terminals)

    def __repr__(self) -> str:
        return f"NuclideRegistry({len(self._nuclides)} nuclides, {len(self._captures)} captures)"


def _column(raw: str, token: str) -> int:
    position = raw.find(token)
    return position + 1 if position >= 0 else 1


def _parse_name(token: str, raw: str, lineno: int, origin: str) -> NuclideId:
    try:
        return parse_name(token)
    except MalformedIdentityError as e:
        raise DataFileError(str(e), lineno, _column(raw, token), origin)


def _parse_half_life(value: str, raw: str, lineno: int, origin: str):
    if value.lower() == 'stable':
        return STABLE
    for unit in sorted(TIME_UNITS, key=len, reverse=True):
        if value.endswith(unit):
            number = value[:-len(unit)]
            try:
                seconds = float(number) * TIME_UNITS[unit]
            except ValueError:
                break
            if not math.isfinite(seconds) or seconds <= 0:
                raise DataFileError(f"Non-positive half-life: {value}", lineno, _column(raw, value), origin)
            return seconds
    raise DataFileError(f"Cannot parse half-life {value!r}", lineno, _column(raw, value), origin)


def _key_values(tokens: List[str], raw: str, lineno: int, origin: str) -> Dict[str, str]:
    fields: Dict[str, str] = {}
    for token in tokens:
        key, sep, value = token.partition('=')
        if not sep or not key or not value:
            raise DataFileError(f"Expected key=value, got {token!r}", lineno, _column(raw, token), origin)
        if key in fields:
            raise DataFileError(f"Repeated key {key!r}", lineno, _column(raw, token), origin)
        fields[key] = value
    return fields


def _parse_float(fields: Dict[str, str], key: str, raw: str, lineno: int, origin: str) -> float:
    text = fields[key]
    try:
        value = float(text)
    except ValueError:
        raise DataFileError(f"Invalid number for {key}: {text!r}", lineno, _column(raw, text), origin)
    if not math.isfinite(value):
        raise DataFileError(f"Non-finite value for {key}", lineno, _column(raw, text), origin)
    return value


def _parse_nuclide(tokens: List[str], raw: str, lineno: int, origin: str) -> Nuclide:
    if len(tokens) < 2:
        raise DataFileError("NUCLIDE record without a name", lineno, 1, origin)
    identity = _parse_name(tokens[1], raw, lineno, origin)
    fields = _key_values(tokens[2:], raw, lineno, origin)
    allowed = {'z', 'n', 'halflife', 'spin', 'moment', 'decay', 'mass', 'source'}
    for key in fields:
        if key not in allowed:
            raise DataFileError(f"Unknown NUCLIDE key {key!r}", lineno, _column(raw, key + '='), origin)
    for key in ('z', 'n', 'halflife', 'spin', 'moment'):
        if key not in fields:
            raise DataFileError(f"NUCLIDE {tokens[1]} missing {key}=", lineno, 1, origin)

    try:
        z, n = int(fields['z']), int(fields['n'])
    except ValueError:
        raise DataFileError("z and n must be integers", lineno, _column(raw, 'z='), origin)
    if (z, n) != (identity.z, identity.n):
        raise DataFileError(f"{tokens[1]} inconsistent with z={z} n={n}", lineno, _column(raw, 'z='), origin)

    half_life = _parse_half_life(fields['halflife'], raw, lineno, origin)
    try:
        spin = Fraction(fields['spin'])
    except (ValueError, ZeroDivisionError):
        raise DataFileError(f"Invalid spin {fields['spin']!r}", lineno, _column(raw, 'spin='), origin)
    moment = _parse_float(fields, 'moment', raw, lineno, origin)
    mass = _parse_float(fields, 'mass', raw, lineno, origin) if 'mass' in fields else None

    decays: List[DecayBranch] = []
    decay_text = fields.get('decay', 'none')
    if decay_text.lower() != 'none':
        for item in decay_text.split(','):
            parts = item.split(':')
            if len(parts) != 3:
                raise DataFileError(f"Decay must be mode:daughter:fraction, got {item!r}",
                                    lineno, _column(raw, item), origin)
            try:
                mode = DecayMode.parse(parts[0])
            except ValueError:
                raise DataFileError(f"Unknown decay mode {parts[0]!r}", lineno, _column(raw, item), origin)
            daughter = _parse_name(parts[1], raw, lineno, origin)
            try:
                fraction = float(parts[2])
            except ValueError:
                raise DataFileError(f"Invalid branching {parts[2]!r}", lineno, _column(raw, item), origin)
            if fraction < 0:
                raise DataFileError(f"Negative branching {parts[2]}", lineno, _column(raw, item), origin)
            decays.append(DecayBranch(mode, daughter, fraction))
        total = math.fsum(branch.fraction for branch in decays)
        if abs(total - 1.0) > BRANCHING_TOLERANCE:
            raise DataFileError(f"branching sum {total:g}", lineno, _column(raw, 'decay='), origin)

    return Nuclide(
        z=z, n=n, isomer=identity.isomer,
        half_life_s=half_life,
        spin=spin,
        magnetic_moment_nm=moment,
        decays=tuple(decays),
        atomic_mass_u=mass,
        provenance=fields.get('source', ''),
    )


def _parse_capture(tokens: List[str], raw: str, lineno: int, origin: str) -> CaptureReaction:
    if len(tokens) < 4 or tokens[2] != '->':
        raise DataFileError("Expected CAPTURE <target> -> <product> sigma=<value>b", lineno, 1, origin)
    target = _parse_name(tokens[1], raw, lineno, origin)
    product = _parse_name(tokens[3], raw, lineno, origin)
    fields = _key_values(tokens[4:], raw, lineno, origin)
    for key in fields:
        if key not in ('sigma', 'ground', 'source'):
            raise DataFileError(f"Unknown CAPTURE key {key!r}", lineno, _column(raw, key + '='), origin)
    if 'sigma' not in fields:
        raise DataFileError("CAPTURE missing sigma=", lineno, 1, origin)
    sigma_text = fields['sigma']
    try:
        sigma = float(sigma_text[:-1] if sigma_text.endswith('b') else sigma_text)
    except ValueError:
        raise DataFileError(f"Invalid cross section {sigma_text!r}", lineno, _column(raw, sigma_text), origin)
    if not math.isfinite(sigma) or sigma <= 0:
        raise DataFileError(f"Non-positive cross section {sigma_text}", lineno, _column(raw, sigma_text), origin)
    ground = _parse_float(fields, 'ground', raw, lineno, origin) if 'ground' in fields else 0.0
    if not 0.0 <= ground <= 1.0:
        raise DataFileError(f"Ground fraction outside [0, 1]: {ground}", lineno, _column(raw, 'ground='), origin)
    if ground > 0 and not product.isomer:
        raise DataFileError("ground= needs an isomeric product", lineno, _column(raw, 'ground='), origin)
    return CaptureReaction(target, product, sigma, ground, fields.get('source', ''))


def load_registry(source: str, origin: str = '<string>') -> NuclideRegistry:
    """Parse a nuclear data document; record order does not matter"""
    nuclides: Dict[NuclideId, Nuclide] = {}
    captures: Dict[Tuple[NuclideId, NuclideId], CaptureReaction] = {}
    terminals = set()

    for lineno, raw in enumerate(source.splitlines(), start=1):
        try:
            tokens = shlex.split(raw, comments=True)
        except ValueError as e:
            raise DataFileError(str(e), lineno, 1, origin)
        if not tokens:
            continue
        keyword = tokens[0].upper()
        if keyword == 'NUCLIDE':
            nuclide = _parse_nuclide(tokens, raw, lineno, origin)
            if nuclide.identity in nuclides:
                raise DataFileError(f"Duplicate key {nuclide.name}", lineno, _column(raw, tokens[1]), origin)
            nuclides[nuclide.identity] = nuclide
        elif keyword == 'CAPTURE':
            capture = _parse_capture(tokens, raw, lineno, origin)
            if capture.key in captures:
                raise DataFileError(f"Duplicate capture {capture.target} -> {capture.product}",
                                    lineno, _column(raw, tokens[1]), origin)
            captures[capture.key] = capture
        elif keyword == 'TERMINAL':
            if len(tokens) != 2:
                raise DataFileError("Expected TERMINAL <name>", lineno, 1, origin)
            terminals.add(_parse_name(tokens[1], raw, lineno, origin))
        else:
            raise DataFileError(f"Unknown record type {tokens[0]!r}", lineno, _column(raw, tokens[0]), origin)

    registry = NuclideRegistry(nuclides.values(), captures.values(), terminals)
    logging.info(f"Loaded nuclear data from {origin}: {len(nuclides)} nuclides, {len(captures)} captures")
    return registry


def load_registry_file(path: Optional[Union[str, Path]] = None) -> NuclideRegistry:
    path = Path(path) if path is not None else DEFAULT_DATA_FILE
    return load_registry(path.read_text(encoding='utf-8'), origin=str(path))


def lookup(registry: NuclideRegistry, identity: IdentityLike) -> Nuclide:
    return registry.lookup(identity)


def serialize_registry(registry: NuclideRegistry) -> str:
    """Write a registry back to the data-file grammar; reparses to an equal registry"""
    lines = []
    for nuclide in registry.nuclides:
        half_life = 'stable' if nuclide.is_stable else f"{nuclide.half_life_s!r}s"
        parts = [
            'NUCLIDE', nuclide.name,
            f"z={nuclide.z}", f"n={nuclide.n}",
            f"halflife={half_life}",
            f"spin={nuclide.spin}",
            f"moment={nuclide.magnetic_moment_nm!r}",
        ]
        if nuclide.decays:
            branches = ','.join(f"{b.mode.value}:{b.daughter.name}:{b.fraction!r}" for b in nuclide.decays)
            parts.append(f"decay={branches}")
        if nuclide.atomic_mass_u is not None:
            parts.append(f"mass={nuclide.atomic_mass_u!r}")
        if nuclide.provenance:
            parts.append(shlex.quote(f"source={nuclide.provenance}"))
        lines.append(' '.join(parts))
    for capture in registry.captures:
        parts = ['CAPTURE', capture.target.name, '->', capture.product.name, f"sigma={capture.sigma_barns!r}b"]
        if capture.ground_fraction:
            parts.append(f"ground={capture.ground_fraction!r}")
        if capture.provenance:
            parts.append(shlex.quote(f"source={capture.provenance}"))
        lines.append(' '.join(parts))
    for terminal in sorted(registry.terminals):
        lines.append(f"TERMINAL {terminal.name}")
    return '\n'.join(lines) + '\n'


def validate_registry(registry: NuclideRegistry) -> List[Violation]:
    """Check every type invariant; violations are returned, never raised"""
    violations: List[Violation] = []

    for nuclide in registry.nuclides:
        name = nuclide.name
        if nuclide.decays:
            total = math.fsum(b.fraction for b in nuclide.decays)
            if abs(total - 1.0) > BRANCHING_TOLERANCE:
                violations.append(Violation(name, 'branching-sum', f"branching sum {total:g}"))
        if bool(nuclide.decays) == nuclide.is_stable:
            violations.append(Violation(name, 'stable-iff-no-decays',
                                        'decays must be empty exactly when the half-life is STABLE'))
        if not nuclide.is_stable and nuclide.half_life_s <= 0:
            violations.append(Violation(name, 'half-life-positive', f"half-life {nuclide.half_life_s}"))
        if nuclide.spin < 0 or (2 * nuclide.spin).denominator != 1:
            violations.append(Violation(name, 'spin-half-integer', f"spin {nuclide.spin}"))
        if (nuclide.z % 2 == 0 and nuclide.n % 2 == 0 and not nuclide.isomer
                and (nuclide.spin != 0 or nuclide.magnetic_moment_nm != 0)):
            violations.append(Violation(name, 'even-even-zero-moment',
                                        f"spin {nuclide.spin}, moment {nuclide.magnetic_moment_nm}"))
        for branch in nuclide.decays:
            if branch.mode is DecayMode.ISOMERIC_TRANSITION:
                expected = NuclideId(nuclide.z, nuclide.n, False)
                if branch.daughter != expected:
                    violations.append(Violation(name, 'isomeric-transition-daughter',
                                                f"IT daughter {branch.daughter} should be {expected}"))
            if not registry.resolvable(branch.daughter):
                violations.append(Violation(name, 'dangling-daughter',
                                            f"daughter {branch.daughter} not in registry"))

    for capture in registry.captures:
        name = f"{capture.target}->{capture.product}"
        if capture.sigma_barns <= 0:
            violations.append(Violation(name, 'sigma-positive', f"sigma {capture.sigma_barns}"))
        if (capture.product.z, capture.product.n) != (capture.target.z, capture.target.n + 1):
            violations.append(Violation(name, 'capture-adds-neutron', 'product must be (z, n+1) of target'))
        if capture.target not in registry:
            violations.append(Violation(name, 'dangling-target', f"target {capture.target} not in registry"))
        if not registry.resolvable(capture.product):
            violations.append(Violation(name, 'dangling-product', f"product {capture.product} not in registry"))
        if capture.ground_fraction and not registry.resolvable(capture.product.ground):
            violations.append(Violation(name, 'dangling-product',
                                        f"ground state {capture.product.ground} not in registry"))

    return violations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
import math
import re
from typing import NamedTuple, Optional, Tuple, Union

AVOGADRO = 6.02214076e23
BARN_CM2 = 1.0e-24

ELEMENT_SYMBOLS = (
    'H', 'He', 'Li', 'Be', 'B', 'C', 'N', 'O', 'F', 'Ne',
    'Na', 'Mg', 'Al', 'Si', 'P', 'S', 'Cl', 'Ar', 'K', 'Ca',
    'Sc', 'Ti', 'V', 'Cr', 'Mn', 'Fe', 'Co', 'Ni', 'Cu', 'Zn',
    'Ga', 'Ge', 'As', 'Se', 'Br', 'Kr', 'Rb', 'Sr', 'Y', 'Zr',
    'Nb', 'Mo', 'Tc', 'Ru', 'Rh', 'Pd', 'Ag', 'Cd', 'In', 'Sn',
    'Sb', 'Te', 'I', 'Xe', 'Cs', 'Ba', 'La', 'Ce', 'Pr', 'Nd',
    'Pm', 'Sm', 'Eu', 'Gd', 'Tb', 'Dy', 'Ho', 'Er', 'Tm', 'Yb',
    'Lu', 'Hf', 'Ta', 'W', 'Re', 'Os', 'Ir', 'Pt', 'Au', 'Hg',
    'Tl', 'Pb', 'Bi', 'Po', 'At', 'Rn', 'Fr', 'Ra', 'Ac', 'Th',
    'Pa', 'U', 'Np', 'Pu', 'Am', 'Cm', 'Bk', 'Cf', 'Es', 'Fm',
)
_Z_BY_SYMBOL = {symbol: z for z, symbol in enumerate(ELEMENT_SYMBOLS, start=1)}
_NAME_PATTERN = re.compile(r'^([A-Z][a-z]?)-(\d+)(m?)$')


class MalformedIdentityError(ValueError):
    """Raised when a nuclide identity cannot denote any nuclide"""


class HalfLife(Enum):
    STABLE = 'stable'


STABLE = HalfLife.STABLE


class DecayMode(Enum):
    BETA_MINUS = 'beta-'
    ISOMERIC_TRANSITION = 'isomeric-transition'
    ELECTRON_CAPTURE = 'electron-capture'

    @classmethod
    def parse(cls, token: str) -> 'DecayMode':
        aliases = {'b-': cls.BETA_MINUS, 'it': cls.ISOMERIC_TRANSITION, 'ec': cls.ELECTRON_CAPTURE}
        lowered = token.lower()
        if lowered in aliases:
            return aliases[lowered]
        return cls(lowered)


class NuclideId(NamedTuple):
    z: int
    n: int
    isomer: bool = False

    @property
    def mass_number(self) -> int:
        return self.z + self.n

    @property
    def name(self) -> str:
        if not 1 <= self.z <= len(ELEMENT_SYMBOLS):
            return f"Z{self.z}-{self.mass_number}{'m' if self.isomer else ''}"
        return f"{ELEMENT_SYMBOLS[self.z - 1]}-{self.mass_number}{'m' if self.isomer else ''}"

    @property
    def ground(self) -> 'NuclideId':
        return NuclideId(self.z, self.n, False)

    def __str__(self) -> str:
        return self.name


def parse_name(name: str) -> NuclideId:
    """Parse a symbol name such as 'Sr-87m' into its identity"""
    match = _NAME_PATTERN.match(name.strip())
    if not match:
        raise MalformedIdentityError(f"Malformed nuclide name: {name!r}")
    symbol, mass, isomer = match.groups()
    if symbol not in _Z_BY_SYMBOL:
        raise MalformedIdentityError(f"Unknown element symbol: {symbol!r}")
    z = _Z_BY_SYMBOL[symbol]
    n = int(mass) - z
    if n < 0:
        raise MalformedIdentityError(f"Mass number below proton count: {name!r}")
    return NuclideId(z, n, bool(isomer))


def as_identity(identity: Union[NuclideId, Tuple[int, int, bool], str]) -> NuclideId:
    """Coerce a name or (z, n, isomer) tuple to a NuclideId, rejecting malformed input"""
    if isinstance(identity, str):
        return parse_name(identity)
    try:
        z, n, isomer = identity
    except (TypeError, ValueError):
        raise MalformedIdentityError(f"Malformed nuclide identity: {identity!r}")
    if isinstance(z, bool) or isinstance(n, bool) or not isinstance(z, int) or not isinstance(n, int):
        raise MalformedIdentityError(f"Proton and neutron counts must be integers: {identity!r}")
    if z < 1 or n < 0:
        raise MalformedIdentityError(f"Need z >= 1 and n >= 0: {identity!r}")
    return NuclideId(z, n, bool(isomer))


@dataclass(frozen=True)
class DecayBranch:
    mode: DecayMode
    daughter: NuclideId
    fraction: float


@dataclass(frozen=True)
class Nuclide:
    z: int
    n: int
    isomer: bool
    half_life_s: Union[float, HalfLife]
    spin: Fraction
    magnetic_moment_nm: float
    decays: Tuple[DecayBranch, ...] = ()
    atomic_mass_u: Optional[float] = None
    provenance: str = ''

    @property
    def identity(self) -> NuclideId:
        return NuclideId(self.z, self.n, self.isomer)

    @property
    def name(self) -> str:
        return self.identity.name

    @property
    def mass_number(self) -> int:
        return self.z + self.n

    @property
    def is_stable(self) -> bool:
        return self.half_life_s is STABLE

    @property
    def decay_constant(self) -> float:
        """lambda = ln2 / half-life in s^-1, zero for STABLE"""
        if self.is_stable:
            return 0.0
        return math.log(2.0) / self.half_life_s

    @property
    def molar_mass(self) -> float:
        """Grams per mole; falls back to the mass number"""
        return self.atomic_mass_u if self.atomic_mass_u is not None else float(self.mass_number)

    def atoms_to_grams(self, atoms: float) -> float:
        return atoms * self.molar_mass / AVOGADRO

    def grams_to_atoms(self, grams: float) -> float:
        return grams * AVOGADRO / self.molar_mass


@dataclass(frozen=True)
class CaptureReaction:
    target: NuclideId
    product: NuclideId
    sigma_barns: float
    # share of sigma feeding the ground state when product is an isomer
    ground_fraction: float = 0.0
    provenance: str = ''

    @property
    def key(self) -> Tuple[NuclideId, NuclideId]:
        return (self.target, self.product)

    def rate(self, flux: float) -> float:
        """Capture rate per target atom (s^-1) at the given flux"""
        return self.sigma_barns * flux * BARN_CM2


@dataclass(frozen=True)
class Violation:
    entry: str
    rule: str
    message: str = field(default='', compare=False)

    def __str__(self) -> str:
        return f"{self.entry}: [{self.rule}] {self.message}"

import pytest
from fractions import Fraction

from src.nuclear_data import (
    AVOGADRO, STABLE, DataFileError, DecayMode, MalformedIdentityError, NuclideId,
    NuclideNotFoundError, as_identity, load_registry, load_registry_file, lookup, parse_name,
    serialize_registry, validate_registry,
)

SR87M_DOCUMENT = """
# Sr-87 isomer as quoted in the clock proposal
NUCLIDE Sr-87  z=38 n=49 halflife=stable spin=9/2 moment=-1.093603
NUCLIDE Sr-87m z=38 n=49 halflife=2.8h spin=1/2 moment=0 decay=it:Sr-87:1.0
"""


class TestIdentities:
    def test_parse_name(self):
        """Test symbol names map to (z, n, isomer)"""
        assert parse_name('Sr-87m') == NuclideId(38, 49, True)
        assert parse_name('Lu-176') == NuclideId(71, 105, False)
        assert NuclideId(69, 101).name == 'Tm-170'

    def test_malformed_names(self):
        """Test malformed identities are rejected before any lookup"""
        for bad in ('Sr87', 'Xx-12', 'sr-87', 'Sr-10'):
            with pytest.raises(MalformedIdentityError):
                parse_name(bad)
        with pytest.raises(MalformedIdentityError):
            as_identity((0, 5, False))
        with pytest.raises(MalformedIdentityError):
            as_identity((38, -1, False))
        with pytest.raises(MalformedIdentityError):
            as_identity((38.0, 49, False))

    def test_ground_state(self):
        assert parse_name('Lu-176m').ground == parse_name('Lu-176')


class TestLoadRegistry:
    def test_half_life_in_hours(self):
        """Test a 2.8 h isomer is stored in seconds and resolvable"""
        registry = load_registry(SR87M_DOCUMENT)
        isomer = registry.lookup('Sr-87m')
        assert isomer.half_life_s == pytest.approx(10080.0)
        assert isomer.decays[0].mode is DecayMode.ISOMERIC_TRANSITION
        assert isomer.decays[0].daughter == NuclideId(38, 49, False)
        assert registry.lookup('Sr-87').half_life_s is STABLE
        assert registry.lookup('Sr-87').spin == Fraction(9, 2)

    def test_time_units(self):
        """Test every half-life unit converts to seconds"""
        expected = {'us': 1e-6, 'ms': 1e-3, 's': 1.0, 'm': 60.0, 'h': 3600.0, 'd': 86400.0,
                    'y': 365.25 * 86400.0}
        for unit, seconds in expected.items():
            registry = load_registry(
                f"NUCLIDE Tm-170 z=69 n=101 halflife=2{unit} spin=1 moment=0.2476 decay=beta-:Yb-170:1.0")
            assert registry.lookup('Tm-170').half_life_s == pytest.approx(2 * seconds)

    def test_empty_document(self):
        """Test an empty document gives an empty registry"""
        registry = load_registry('')
        assert len(registry) == 0
        assert registry.captures == ()
        assert load_registry('# only a comment\n\n') == registry

    def test_branching_sum(self):
        """Test branchings 0.6/0.3 are reported with their sum"""
        document = ("NUCLIDE Sr-88 z=38 n=50 halflife=stable spin=0 moment=0\n"
                    "NUCLIDE Rb-88 z=37 n=51 halflife=17.8m spin=2 moment=0.508 "
                    "decay=beta-:Sr-88:0.6,ec:Sr-88:0.3\n")
        with pytest.raises(DataFileError, match='branching sum 0.9') as excinfo:
            load_registry(document)
        assert excinfo.value.line == 2
        assert excinfo.value.column > 1

    def test_duplicate_key(self):
        document = ("NUCLIDE Ca-43 z=20 n=23 halflife=stable spin=7/2 moment=-1.3176\n"
                    "NUCLIDE Ca-43 z=20 n=23 halflife=stable spin=7/2 moment=-1.3176\n")
        with pytest.raises(DataFileError, match='Duplicate key Ca-43') as excinfo:
            load_registry(document, origin='dup.dat')
        assert excinfo.value.line == 2
        assert str(excinfo.value).startswith('dup.dat:2:')

    def test_negative_values(self):
        """Test negative half-lives and cross sections are syntax-level errors"""
        with pytest.raises(DataFileError, match='half-life'):
            load_registry("NUCLIDE Tm-170 z=69 n=101 halflife=-1d spin=1 moment=0 decay=beta-:Yb-170:1.0")
        document = ("NUCLIDE Tm-169 z=69 n=100 halflife=stable spin=1/2 moment=-0.2316\n"
                    "CAPTURE Tm-169 -> Tm-170 sigma=-105b\n")
        with pytest.raises(DataFileError, match='cross section') as excinfo:
            load_registry(document)
        assert excinfo.value.line == 2

    def test_syntax_errors(self):
        """Test malformed records name their line and column"""
        with pytest.raises(DataFileError, match='Unknown record type'):
            load_registry("ISOTOPE Sr-86")
        with pytest.raises(DataFileError, match='missing moment'):
            load_registry("NUCLIDE Sr-86 z=38 n=48 halflife=stable spin=0")
        with pytest.raises(DataFileError, match='inconsistent'):
            load_registry("NUCLIDE Sr-86 z=38 n=49 halflife=stable spin=0 moment=0")
        with pytest.raises(DataFileError, match='isomeric product'):
            load_registry("CAPTURE Sr-87 -> Sr-88 sigma=16b ground=0.5")
        with pytest.raises(DataFileError) as excinfo:
            load_registry("\n\nNUCLIDE Sr-86 z=38 n=48 halflife=soon spin=0 moment=0")
        assert (excinfo.value.line, excinfo.value.column) == (3, 34)

    def test_order_independence(self, registry):
        """Test reversing the record order gives an equal registry"""
        text = serialize_registry(registry)
        reversed_text = '\n'.join(reversed(text.splitlines()))
        assert load_registry(reversed_text) == registry

    def test_shipped_file(self, registry):
        """Test the curated file loads every clock and chain species"""
        for name in ('Sr-86', 'Sr-87', 'Sr-87m', 'Yb-174', 'Yb-175', 'Lu-175', 'Lu-176', 'Lu-176m',
                     'Lu-177', 'Tm-169', 'Tm-170', 'Hg-199'):
            assert name in registry
        assert registry.lookup('Lu-176').half_life_s is not STABLE
        capture = {c.key: c for c in registry.captures}[(parse_name('Lu-176'), parse_name('Lu-177'))]
        assert capture.sigma_barns > 2000
        assert load_registry_file() == registry


class TestLookup:
    def test_lookup_by_identity(self, registry):
        """Test (71, 105, false) resolves to Lu-176 with its spin and moment"""
        lu176 = lookup(registry, (71, 105, False))
        assert lu176.name == 'Lu-176'
        assert lu176.spin == 7
        assert lu176.magnetic_moment_nm == pytest.approx(3.1692)
        assert lookup(registry, (38, 49, True)).name == 'Sr-87m'

    def test_not_found_is_distinct_from_malformed(self, registry):
        with pytest.raises(NuclideNotFoundError):
            lookup(registry, (1, 500, False))
        with pytest.raises(MalformedIdentityError):
            lookup(registry, (0, 500, False))
        assert not issubclass(NuclideNotFoundError, MalformedIdentityError)
        assert (1, 500, False) not in registry

    def test_mass_conversion(self, registry):
        """Test grams and atoms convert through the atomic mass"""
        sr86 = registry.lookup('Sr-86')
        assert sr86.grams_to_atoms(20.0) == pytest.approx(20.0 / 85.9092607 * AVOGADRO)
        assert sr86.atoms_to_grams(sr86.grams_to_atoms(20.0)) == pytest.approx(20.0)
        assert sr86.decay_constant == 0.0
        assert registry.lookup('Sr-87m').decay_constant == pytest.approx(0.693147 / (2.815 * 3600), rel=1e-5)

    def test_with_cross_section(self, registry):
        """Test a replaced cross section leaves the original registry untouched"""
        changed = registry.with_cross_section('Sr-86', 'Sr-87m', 1.144)
        assert changed.captures_from('Sr-86')[0].sigma_barns == 1.144
        assert registry.captures_from('Sr-86')[0].sigma_barns == 1.0
        assert changed.captures_from('Sr-86')[0].ground_fraction == 0.19
        with pytest.raises(NuclideNotFoundError):
            registry.with_cross_section('Sr-86', 'Sr-88', 1.0)
        with pytest.raises(ValueError):
            registry.with_cross_section('Sr-86', 'Sr-87m', 0.0)


class TestValidateRegistry:
    def test_shipped_file_is_clean(self, registry):
        """Test the curated data file passes every invariant"""
        assert validate_registry(registry) == []

    def test_even_even_moment(self):
        """Test an even-even ground state with a moment is one violation"""
        registry = load_registry("NUCLIDE Sr-88 z=38 n=50 halflife=stable spin=0 moment=0.5")
        violations = validate_registry(registry)
        assert len(violations) == 1
        assert violations[0].entry == 'Sr-88'
        assert violations[0].rule == 'even-even-zero-moment'

    def test_dangling_daughter(self):
        registry = load_registry(
            "NUCLIDE Tm-170 z=69 n=101 halflife=128.6d spin=1 moment=0.2476 decay=beta-:Yb-170:1.0")
        violations = validate_registry(registry)
        assert [(v.entry, v.rule) for v in violations] == [('Tm-170', 'dangling-daughter')]

    def test_terminal_resolves_daughter(self):
        registry = load_registry(
            "NUCLIDE Tm-170 z=69 n=101 halflife=128.6d spin=1 moment=0.2476 decay=beta-:Yb-170:1.0\n"
            "TERMINAL Yb-170\n")
        assert validate_registry(registry) == []
        assert registry.is_terminal('Yb-170')

    def test_capture_rules(self):
        """Test captures must add one neutron to a known target"""
        registry = load_registry(
            "NUCLIDE Sr-88 z=38 n=50 halflife=stable spin=0 moment=0\n"
            "CAPTURE Sr-86 -> Sr-88 sigma=1b\n")
        rules = sorted(v.rule for v in validate_registry(registry))
        assert rules == ['capture-adds-neutron', 'dangling-target']

    def test_isomeric_transition_daughter(self):
        registry = load_registry(
            "NUCLIDE Sr-86 z=38 n=48 halflife=stable spin=0 moment=0\n"
            "NUCLIDE Sr-87m z=38 n=49 halflife=2.815h spin=1/2 moment=0 decay=it:Sr-86:1.0\n")
        violations = validate_registry(registry)
        assert [v.rule for v in violations] == ['isomeric-transition-daughter']
        assert 'Sr-87m' in str(violations[0])

    def test_half_integer_spin(self):
        registry = load_registry("NUCLIDE Ca-43 z=20 n=23 halflife=stable spin=7/3 moment=-1.3176")
        assert [v.rule for v in validate_registry(registry)] == ['spin-half-integer']


class TestRoundTrip:
    def test_shipped_file_round_trip(self, registry):
        """Test serialized data reparses to an equal registry"""
        text = serialize_registry(registry)
        assert load_registry(text) == registry
        assert serialize_registry(load_registry(text)) == text

    def test_isomer_ground_fraction_round_trip(self):
        document = ("NUCLIDE Sr-86 z=38 n=48 halflife=stable spin=0 moment=0\n"
                    "NUCLIDE Sr-87 z=38 n=49 halflife=stable spin=9/2 moment=-1.093603\n"
                    "NUCLIDE Sr-87m z=38 n=49 halflife=2.815h spin=1/2 moment=0 "
                    "decay=isomeric-transition:Sr-87:1.0 source='ENSDF 2021'\n"
                    "CAPTURE Sr-86 -> Sr-87m sigma=1.00b ground=0.19\n")
        registry = load_registry(document)
        assert registry.lookup('Sr-87m').provenance == 'ENSDF 2021'
        assert load_registry(serialize_registry(registry)) == registry

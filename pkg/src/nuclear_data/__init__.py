from .nuclide import (
    AVOGADRO, BARN_CM2, STABLE, CaptureReaction, DecayBranch, DecayMode, HalfLife,
    MalformedIdentityError, Nuclide, NuclideId, Violation, as_identity, parse_name,
)
from .registry import (
    DEFAULT_DATA_FILE, TIME_UNITS, DataFileError, NuclideNotFoundError, NuclideRegistry,
    load_registry, load_registry_file, lookup, serialize_registry, validate_registry,
)

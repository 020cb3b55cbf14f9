"""Atomic species registry backed by ``data/species.json``."""
import math
from dataclasses import dataclass
from functools import lru_cache

from .constants import AMU, C, NM, TWO_PI, _load
from .errors import DomainError, UnknownSpeciesError


@dataclass(frozen=True)
class AtomSpecies:
    """Two-level atomic transition used by every physical formula.

    ``omega_a`` and ``k_a`` are derived from ``lambda_a`` so the three can
    never disagree. ``Gamma_a`` is angular (rad/s).
    """

    name: str
    lambda_a: float
    Gamma_a: float
    mass: float
    eta: float = 0.5

    def __post_init__(self):
        if not self.lambda_a > 0:
            raise DomainError(f"lambda_a must be positive, got {self.lambda_a}")
        if not self.Gamma_a > 0:
            raise DomainError(f"Gamma_a must be positive, got {self.Gamma_a}")
        if not self.mass > 0:
            raise DomainError(f"mass must be positive, got {self.mass}")
        if not 0.0 < self.eta <= 1.0:
            raise DomainError(f"eta must lie in (0, 1], got {self.eta}")

    @property
    def omega_a(self):
        return TWO_PI * C / self.lambda_a

    @property
    def k_a(self):
        return TWO_PI / self.lambda_a

    @property
    def cross_section(self):
        """Effective resonant cross section 3 eta lambda_a^2 / (2 pi)."""
        return 3.0 / (2.0 * math.pi) * self.eta * self.lambda_a**2

    def with_eta(self, eta):
        return AtomSpecies(self.name, self.lambda_a, self.Gamma_a, self.mass, eta)


@lru_cache(maxsize=None)
def _registry():
    data = _load("species.json")
    out = {}
    for row in data["species"]:
        out[row["name"]] = AtomSpecies(
            name=row["name"],
            lambda_a=row["lambda_a_nm"] * NM,
            Gamma_a=TWO_PI * row["gamma_a_over_2pi_Hz"],
            mass=row["mass_amu"] * AMU,
            eta=row["eta"],
        )
    return out


def available_species():
    return sorted(_registry())


def species_lookup(name):
    """Return the registered :class:`AtomSpecies` called ``name``."""
    try:
        return _registry()[name]
    except KeyError:
        raise UnknownSpeciesError(
            f"unknown species {name!r}; available: {', '.join(available_species())}"
        ) from None

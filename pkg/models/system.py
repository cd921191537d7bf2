from enum import Enum
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field


class Symmetry(str, Enum):
    SYMMETRIC = "symmetric"
    ANTISYMMETRIC = "antisymmetric"

    @property
    def sign(self) -> int:
        return 1 if self is Symmetry.SYMMETRIC else -1


class Parity(str, Enum):
    EVEN = "even"
    ODD = "odd"
    NONE = "none"

    @classmethod
    def of(cls, symmetry: Symmetry) -> "Parity":
        return cls.EVEN if symmetry is Symmetry.SYMMETRIC else cls.ODD


class CoordinateFrame(str, Enum):
    TWO_PARTICLE = "two_particle"
    RELATIVE = "relative"
    CENTER_OF_MASS = "center_of_mass"


class SystemSpec(BaseModel):
    """Two particles in an isotropic harmonic trap, in units of l0, 1/Omega and hbar*Omega."""

    model_config = ConfigDict(frozen=True)

    dimension: Literal[1, 2] = 1
    coupling: float = Field(0.0, ge=0.0)
    symmetry: Symmetry = Symmetry.ANTISYMMETRIC
    softening: float = Field(0.0, ge=0.0)
    interaction_exponent: float = Field(1.0, gt=0.0)
    trap_frequency: Literal[1.0] = 1.0

    @property
    def is_bare(self) -> bool:
        return self.softening == 0.0

    @property
    def needs_bose_fermi_mapping(self) -> bool:
        # 1D bare repulsion: the even sector is reached through the odd one
        return self.dimension == 1 and self.is_bare and self.symmetry is Symmetry.SYMMETRIC \
            and self.coupling > 0.0 and self.interaction_exponent >= 1.0

    def with_coupling(self, coupling: float) -> "SystemSpec":
        return self.model_copy(update={"coupling": coupling})

    def with_symmetry(self, symmetry: Symmetry) -> "SystemSpec":
        return self.model_copy(update={"symmetry": symmetry})

from typing import Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field, model_validator

from models.system import CoordinateFrame, Parity


class Grid(BaseModel):
    """Uniform grid with hard walls just outside ``lower`` and ``upper``.

    Cartesian nodes sit at lower + (j+1) h with h = (upper - lower) / (points + 1).
    Radial grids are staggered, r_j = (j + 1/2) h with h = upper / (points + 1/2),
    so the centrifugal term is never evaluated at r = 0.
    """

    model_config = ConfigDict(frozen=True)

    lower: float
    upper: float
    points: int = Field(..., ge=3)
    radial: bool = False

    @model_validator(mode="after")
    def check_extent(self):
        if self.upper <= self.lower:
            raise ValueError("Grid upper bound must exceed lower bound")
        if self.radial and self.lower != 0.0:
            raise ValueError("Radial grids start at r = 0")
        return self

    @classmethod
    def symmetric(cls, half_width: float, points: int) -> "Grid":
        # even point counts keep x = 0 off the grid
        if points % 2:
            points += 1
        return cls(lower=-half_width, upper=half_width, points=points)

    @classmethod
    def radial_grid(cls, r_max: float, points: int) -> "Grid":
        return cls(lower=0.0, upper=r_max, points=points, radial=True)

    @computed_field
    @property
    def spacing(self) -> float:
        if self.radial:
            return self.upper / (self.points + 0.5)
        return (self.upper - self.lower) / (self.points + 1)

    @property
    def coordinates(self) -> np.ndarray:
        j = np.arange(self.points, dtype=float)
        if self.radial:
            return (j + 0.5) * self.spacing
        return self.lower + (j + 1.0) * self.spacing

    def refined(self, factor: float) -> "Grid":
        points = int(round(self.points * factor))
        if not self.radial and self.lower == -self.upper and points % 2:
            points += 1
        return self.model_copy(update={"points": points})


class GridWavefunction(BaseModel):
    """Complex amplitudes on one grid (line problems) or on grid x grid (two-particle 1D)."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    grid: Grid
    amplitudes: np.ndarray
    frame: CoordinateFrame
    parity: Parity = Parity.NONE
    angular_momentum: Optional[int] = Field(None, ge=0)

    @model_validator(mode="after")
    def check_shape(self):
        n = self.grid.points
        expected: Tuple[int, ...] = (n, n) if self.frame is CoordinateFrame.TWO_PARTICLE else (n,)
        if self.amplitudes.shape != expected:
            raise ValueError(f"Amplitudes of shape {self.amplitudes.shape} do not match grid {expected}")
        if self.angular_momentum is not None and not self.grid.radial:
            raise ValueError("Angular momentum is only meaningful on radial grids")
        return self

    @property
    def volume_element(self) -> float:
        h = self.grid.spacing
        return h * h if self.frame is CoordinateFrame.TWO_PARTICLE else h

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.volume_element)

    def with_amplitudes(self, amplitudes: np.ndarray) -> "GridWavefunction":
        return self.model_copy(update={"amplitudes": amplitudes})


class BasisWavefunction(BaseModel):
    """Coefficients over oscillator eigenfunctions.

    Line problems carry a vector over the sector's basis functions; the two-particle
    product basis carries a (com, relative) coefficient matrix.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    coefficients: np.ndarray
    frame: CoordinateFrame
    parity: Parity = Parity.NONE
    angular_momentum: Optional[int] = Field(None, ge=0)

    @property
    def basis_size(self) -> int:
        return int(self.coefficients.size)

    def norm(self) -> float:
        return float(np.sum(np.abs(self.coefficients) ** 2))

    def with_coefficients(self, coefficients: np.ndarray) -> "BasisWavefunction":
        return self.model_copy(update={"coefficients": coefficients})


class SeparatedWavefunction(BaseModel):
    """Product state phi(R) chi(r) of the center-of-mass and relative problems, each on a grid or in a basis."""

    center_of_mass: Union[GridWavefunction, BasisWavefunction]
    relative: Union[GridWavefunction, BasisWavefunction]

    @model_validator(mode="after")
    def check_frames(self):
        if self.center_of_mass.frame is not CoordinateFrame.CENTER_OF_MASS:
            raise ValueError("First factor must live in the center-of-mass frame")
        if self.relative.frame is not CoordinateFrame.RELATIVE:
            raise ValueError("Second factor must live in the relative frame")
        return self

    @property
    def parity(self) -> Parity:
        return self.relative.parity

    def norm(self) -> float:
        return self.center_of_mass.norm() * self.relative.norm()


Wavefunction = Union[GridWavefunction, BasisWavefunction, SeparatedWavefunction]

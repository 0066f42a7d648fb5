"""Unit conventions and the scalar scales derived from a rectangular barrier.

Energies are in eV, lengths in nm and times in fs throughout the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional


class ParameterError(ValueError):
    """Raised when a barrier or numeric parameter is outside its domain."""


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = 0.6582119569  # eV fs
    hbar2_over_2me: float = 0.0380998  # eV nm^2, free-electron mass

    def __post_init__(self):
        if not (self.hbar > 0 and self.hbar2_over_2me > 0):
            raise ParameterError("physical constants must be positive")


CONSTANTS = PhysicalConstants()


def _require_positive(**values: float) -> None:
    for name, value in values.items():
        if not (math.isfinite(value) and value > 0):
            raise ParameterError(f"{name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class BarrierSpec:
    """Barrier height ``V0`` (eV), width ``L`` (nm), effective mass ratio and
    incidence energy ``E`` (eV)."""

    V0: float = 0.3
    L: float = 5.0
    mass_ratio: float = 0.067
    E: float = 0.01

    def __post_init__(self):
        _require_positive(V0=self.V0, L=self.L, mass_ratio=self.mass_ratio, E=self.E)

    @property
    def tunneling(self) -> bool:
        return self.E < self.V0

    def replace(self, **changes: float) -> "BarrierSpec":
        fields = dict(V0=self.V0, L=self.L, mass_ratio=self.mass_ratio, E=self.E)
        fields.update(changes)
        return BarrierSpec(**fields)

    # Unit helpers shared by every module.
    @property
    def hbar2_over_2m(self) -> float:
        """hbar^2/2m in eV nm^2."""
        return CONSTANTS.hbar2_over_2me / self.mass_ratio

    @property
    def hbar_over_m(self) -> float:
        """hbar/m in nm^2/fs."""
        return 2.0 * self.hbar2_over_2m / CONSTANTS.hbar


@dataclass(frozen=True)
class DerivedScales:
    k: float
    k0: float
    kappa: Optional[float]  # None when E >= V0
    alpha: float
    u: float
    gamma: Optional[float]  # None when E < V0 fails
    t0_barrier: float
    t0_free: float
    v_k: float


def wavenumber(energy: float, mass_ratio: float) -> float:
    """sqrt(2 m E)/hbar in nm^-1."""
    _require_positive(energy=energy, mass_ratio=mass_ratio)
    return math.sqrt(energy * mass_ratio / CONSTANTS.hbar2_over_2me)


def opacity_of(V0: float, L: float, mass_ratio: float) -> float:
    """Barrier opacity ``alpha = k0 L`` with ``k0 = sqrt(2 m V0)/hbar``."""
    _require_positive(V0=V0, L=L, mass_ratio=mass_ratio)
    return L * wavenumber(V0, mass_ratio)


def derive_scales(spec: BarrierSpec) -> DerivedScales:
    k = wavenumber(spec.E, spec.mass_ratio)
    k0 = wavenumber(spec.V0, spec.mass_ratio)
    u = spec.V0 / spec.E
    alpha = opacity_of(spec.V0, spec.L, spec.mass_ratio)
    if spec.E < spec.V0:
        kappa = math.sqrt(k0 * k0 - k * k)
    else:
        kappa = None
    # gamma = 2 alpha sqrt(1 - 1/u) is defined for u >= 1
    gamma = 2.0 * alpha * math.sqrt(1.0 - 1.0 / u) if u >= 1.0 else None
    hom = spec.hbar_over_m
    return DerivedScales(
        k=k,
        k0=k0,
        kappa=kappa,
        alpha=alpha,
        u=u,
        gamma=gamma,
        t0_barrier=spec.L / (hom * k0),
        t0_free=spec.L / (hom * k),
        v_k=hom * k,
    )

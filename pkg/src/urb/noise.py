"""Noise placement around ideal gates.

In-between placement: ``phi = N_R o omega`` and ``phi* = omega^dag o N_L``.
Sandwiched placement: ``phi = omega o N_R`` and ``phi* = N_L o omega^dag``.
A missing channel means the identity.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .superops import Superoperator, adjoint, depolarizing, is_cptp, replacement

PLACEMENTS = ("in-between", "sandwiched")


class NoisePlacementError(ValueError):
    pass


@dataclass(frozen=True)
class NoiseModel:
    right: Superoperator | None = None
    left: Superoperator | None = None
    placement: str = "in-between"

    def __post_init__(self):
        if self.placement not in PLACEMENTS:
            raise NoisePlacementError(
                f"unsupported noise placement {self.placement!r}; expected one of {PLACEMENTS}"
            )
        for name in ("right", "left"):
            ch = getattr(self, name)
            if ch is not None and not is_cptp(ch):
                raise ValueError(f"{name} noise is not a quantum channel")

    @property
    def is_noiseless(self) -> bool:
        return self.right is None and self.left is None

    def implement(self, omega: Superoperator) -> tuple[Superoperator, Superoperator]:
        """Return ``(phi, phi*)`` for the ideal unitary channel ``omega``."""
        omega_dag = adjoint(omega)
        phi, phi_star = omega, omega_dag
        if self.placement == "in-between":
            if self.right is not None:
                phi = self.right @ omega
            if self.left is not None:
                phi_star = omega_dag @ self.left
        else:
            if self.right is not None:
                phi = omega @ self.right
            if self.left is not None:
                phi_star = self.left @ omega_dag
        return phi, phi_star


@dataclass(frozen=True)
class GateDependentNoise:
    """One NoiseModel per gate, indexed like the gate list."""

    table: tuple[NoiseModel, ...]

    def model_for(self, index: int) -> NoiseModel:
        return self.table[index]


NOISELESS = NoiseModel()


def resolve(noise, index: int) -> NoiseModel:
    if noise is None:
        return NOISELESS
    if isinstance(noise, GateDependentNoise):
        return noise.model_for(index)
    if isinstance(noise, NoiseModel):
        return noise
    raise NoisePlacementError(f"unsupported noise specification {type(noise).__name__}")


def depolarizing_noise(q: float, d: int = 2, placement: str = "in-between", side: str = "right") -> NoiseModel:
    ch = depolarizing(q, d)
    return NoiseModel(**{side: ch}, placement=placement)


def replacement_noise(p: float, state, placement: str = "in-between", side: str = "right") -> NoiseModel:
    ch = replacement(p, np.asarray(state))
    return NoiseModel(**{side: ch}, placement=placement)


def gate_dependent(models: Sequence[NoiseModel]) -> GateDependentNoise:
    return GateDependentNoise(tuple(models))

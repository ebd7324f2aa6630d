"""Zeroing control barrier functions for relative-degree-two constraints.

For a constraint ``h(x) >= 0`` whose second derivative is affine in the
input, the barrier ``B = hdot + alpha1(h)`` is kept nonnegative by requiring
``L_f B + L_g B u + alpha2(B) >= 0`` at every instant.
"""

from dataclasses import dataclass, field

import numpy as np

FAMILIES = ("slip", "joint", "rolling", "actuator")


@dataclass(frozen=True)
class ClassKappa:
    """Odd power law ``alpha(h) = coefficient * h**power``."""
    coefficient: float = 1.0
    power: int = 3

    def __post_init__(self):
        if not self.coefficient > 0:
            raise ValueError("class-K coefficient must be positive")
        if int(self.power) != self.power or self.power < 1 or self.power % 2 == 0:
            raise ValueError("class-K power must be an odd positive integer")

    def __call__(self, h):
        return self.coefficient * np.power(h, self.power)

    def derivative(self, h):
        return self.coefficient * self.power * np.power(h, self.power - 1)


@dataclass(frozen=True)
class BarrierSpec:
    alpha1: ClassKappa = field(default_factory=ClassKappa)
    alpha2: ClassKappa = field(default_factory=ClassKappa)


@dataclass(frozen=True)
class BarrierRow:
    row: np.ndarray
    rhs: float
    family: str
    h: float
    h_dot: float
    B: float


def barrier_value(spec, h, h_dot):
    return h_dot + spec.alpha1(h)


def membership(spec, h, h_dot):
    """True when ``(h, h_dot)`` lies in the set where both h and B are nonnegative."""
    return bool(h >= 0 and barrier_value(spec, h, h_dot) >= 0)


def constraint_row(spec, Lf_B, Lg_B, h=np.nan, h_dot=np.nan, family="joint"):
    """Halfspace ``row @ u >= rhs`` encoding ``L_f B + L_g B u + alpha2(B) >= 0``.

    ``Lf_B`` and ``Lg_B`` are the drift and input parts of dB/dt. ``h`` and
    ``h_dot`` are needed to evaluate ``B``.
    """
    B = barrier_value(spec, h, h_dot)
    return BarrierRow(np.asarray(Lg_B, dtype=float), float(-Lf_B - spec.alpha2(B)),
                      family, float(h), float(h_dot), float(B))


def second_order_terms(spec, h, h_dot, h_ddot_drift, h_ddot_map):
    """Lie derivatives of ``B`` given ``h_ddot = drift + map @ u``."""
    Lf_B = h_ddot_drift + spec.alpha1.derivative(h) * h_dot
    return Lf_B, np.asarray(h_ddot_map, dtype=float)

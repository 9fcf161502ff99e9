"""
Provides functions converting SI circuit values into energies.

Energies are stored as angular frequencies E/hbar (rad/s) throughout the package;
helpers convert to and from the ordinary frequencies (E/h) quoted in reports.
"""

import numpy as np
from scipy import constants

FLUX_QUANTUM = constants.h / (2 * constants.e)
REDUCED_FLUX_QUANTUM = FLUX_QUANTUM / (2 * np.pi)

_TWO_PI = 2 * np.pi


def josephson_energy(critical_current: float) -> float:
    """
    Josephson energy E_J = I0 Phi_0 / 2pi of a junction.

    :param critical_current: Critical current in amperes.
    :return: E_J / hbar in rad/s.
    """
    return critical_current * REDUCED_FLUX_QUANTUM / constants.hbar


def charging_energy(capacitance: float) -> float:
    """
    Single-electron charging energy E_C = e^2 / 2C.

    :param capacitance: Capacitance in farads.
    :return: E_C / hbar in rad/s.
    """
    return constants.e**2 / (2 * capacitance) / constants.hbar


def inductive_energy(inductance: float) -> float:
    """
    Inductive energy E_L = (Phi_0 / 2pi)^2 / L.

    :param inductance: Inductance in henries.
    :return: E_L / hbar in rad/s.
    """
    return REDUCED_FLUX_QUANTUM**2 / inductance / constants.hbar


def coupling_charging_energy(
    capacitance_1: float, capacitance_2: float, coupler_capacitance: float
) -> float:
    """
    Capacitive coupling energy between two nodes bridged by the coupler capacitance,
    4e^2 / [C1 C2 (1/C1 + 1/C2 + 1/Cc)], written so that Cc = 0 gives 0.

    :param capacitance_1: First node capacitance in farads.
    :param capacitance_2: Second node capacitance in farads.
    :param coupler_capacitance: Bridging capacitance in farads.
    :return: E_C^c / hbar in rad/s.
    """
    numerator = 4 * constants.e**2 * coupler_capacitance
    denominator = (
        coupler_capacitance * (capacitance_1 + capacitance_2)
        + capacitance_1 * capacitance_2
    )

    return numerator / denominator / constants.hbar


def series_loaded(capacitance: float, other: float, bridge: float) -> float:
    """
    Capacitance of a node loaded by another node through a bridging capacitance,
    C + C' Cb / (C' + Cb).

    :param capacitance: Own node capacitance in farads.
    :param other: Capacitance of the other node in farads.
    :param bridge: Bridging capacitance in farads.
    :return: Loaded capacitance in farads.
    """
    return capacitance + other * bridge / (other + bridge)


def to_ghz(omega: float) -> float:
    return omega / _TWO_PI / 1e9


def to_mhz(omega: float) -> float:
    return omega / _TWO_PI / 1e6


def to_khz(omega: float) -> float:
    return omega / _TWO_PI / 1e3


def from_ghz(frequency: float) -> float:
    return _TWO_PI * frequency * 1e9


def from_mhz(frequency: float) -> float:
    return _TWO_PI * frequency * 1e6


def from_khz(frequency: float) -> float:
    return _TWO_PI * frequency * 1e3


def from_hz(frequency: float) -> float:
    return _TWO_PI * frequency

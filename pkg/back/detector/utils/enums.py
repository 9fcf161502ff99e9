"""
Provides various enumerations that inherit from a custom class BaseEnum.
"""

from enum import Enum


class BaseEnum(Enum):
    """
    Same as Enum but with some handy class methods.
    """

    @classmethod
    def names(cls):
        """
        Retrieve all names from an Enum.

        :return: A list made of the Enum names.
        """
        return [enum.name for enum in cls]

    @classmethod
    def values(cls):
        """
        Retrieve all values from an Enum.

        :return: A list made of the Enum values.
        """
        return [enum.value for enum in cls]


class Label(str, BaseEnum):
    """
    An Enum listing labels in DataFrame columns, which are also CSV headers.
    """

    PHI_C = "phi_c"
    PHI_C_PRIME = "phi_c_prime"
    E_EFF_GHZ = "E_eff_GHz"
    G21_MHZ = "g21_MHz"
    PARITY_RESIDUAL = "parity_residual"
    TIME_NS = "time_ns"
    POP_G = "pop_g"
    POP_E = "pop_e"
    POP_F = "pop_f"
    POP_S = "pop_s"
    N_STORAGE = "n_storage"
    N_BUFFER = "n_buffer"
    N_FILTER = "n_filter"
    AXIS_1 = "axis1"
    AXIS_2 = "axis2"
    P_CLK_2 = "P_clk2"
    P_DARK = "P_dark"
    FIDELITY = "F"
    STATUS = "status"
    BIAS_FLUX = "bias_flux"
    PHI = "phi"
    POTENTIAL_GHZ = "U_GHz"
    LEVEL = "level"
    ENERGY_GHZ = "E_GHz"
    WELL = "well"
    MEAN_PHI = "mean_phi"


class CouplerVariant(str, BaseEnum):
    """
    An Enum listing the two coupler geometries: a plain asymmetric dc SQUID
    and a BiSQUID whose small junction is a flux-tunable symmetric sub-SQUID.
    """

    ASYMMETRIC_SQUID = "AsymmetricSquid"
    BI_SQUID = "BiSquid"

    def get_beta(self) -> int:
        """
        Number of extra junction self-capacitances carried by the large arm.

        :return: 0 for the asymmetric SQUID, 1 for the BiSQUID.
        """
        return 1 if self == CouplerVariant.BI_SQUID else 0


class WellLabel(str, BaseEnum):
    """
    An Enum listing where a JPM eigenstate lives: 'LeftWell', 'RightWell', 'Superbarrier'.
    """

    LEFT_WELL = "LeftWell"
    RIGHT_WELL = "RightWell"
    SUPERBARRIER = "Superbarrier"


class JpmLevel(str, BaseEnum):
    """
    An Enum listing the four JPM levels kept in the dynamics,
    in the order of their tensor-factor index.
    """

    G = "g"
    E = "e"
    F = "f"
    S = "s"

    def get_index(self) -> int:
        return list(JpmLevel).index(self)


class AxisScale(str, BaseEnum):
    """
    An Enum listing how sweep axis points are spaced.
    """

    LINEAR = "linear"
    LOG = "log"


class Subcommand(str, BaseEnum):
    """
    An Enum listing CLI subcommands.
    """

    COUPLER = "coupler"
    JPM = "jpm"
    SIMULATE = "simulate"
    SWEEP = "sweep"
    TABLES = "tables"

from back.detector.models.coupled_resonators import (
    CouplerSpec,
    ResonatorSpec,
    coupler_off_point,
    coupling_set,
    effective_josephson_energy,
    find_odd_parity_flux,
    phase_shift,
    solve_equilibrium_phases,
)
from back.detector.models.photomultiplier import (
    JpmSpec,
    SpectrumSettings,
    charge_matrix,
    classify_states,
    dephasing_rates,
    drive_and_coupling,
    jpm_potential,
    rate_table,
    solve_spectrum,
)
from back.detector.models.master_equation import (
    DetectorSettings,
    HilbertSpace,
    ModelParams,
    build_dissipators,
    build_hamiltonian,
    click_probability,
    evolve,
    false_click_probability,
)
from back.detector.models.detection_fidelity import (
    FidelityMap,
    FidelityPoint,
    SweepSpec,
    fidelity,
    optimize,
    sweep,
)

__all__ = [
    "CouplerSpec",
    "ResonatorSpec",
    "coupler_off_point",
    "coupling_set",
    "effective_josephson_energy",
    "find_odd_parity_flux",
    "phase_shift",
    "solve_equilibrium_phases",
    "JpmSpec",
    "SpectrumSettings",
    "charge_matrix",
    "classify_states",
    "dephasing_rates",
    "drive_and_coupling",
    "jpm_potential",
    "rate_table",
    "solve_spectrum",
    "DetectorSettings",
    "HilbertSpace",
    "ModelParams",
    "build_dissipators",
    "build_hamiltonian",
    "click_probability",
    "evolve",
    "false_click_probability",
    "FidelityMap",
    "FidelityPoint",
    "SweepSpec",
    "fidelity",
    "optimize",
    "sweep",
]

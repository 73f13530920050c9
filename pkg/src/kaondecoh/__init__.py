"""Decoherence of entangled neutral kaons and the accompanying entanglement loss."""

from .constants import Constants, load_constants
from .entanglement import (
    BellDecomposition,
    EntanglementReport,
    bell_decompose,
    concurrence,
    entanglement_report,
    eof,
    fully_entangled_fraction,
    ppt_test,
    reduced_entropies,
    reduction_test,
    spin_flip,
    sweep_report,
    vn_entropy,
)
from .estimators import DecoherenceRegressor, EntanglementFeatures
from .evolution import (
    KaonParams,
    effective_hamiltonian,
    evolve_1p_analytic,
    evolve_2p_analytic,
    evolve_numeric,
    lindblad_operators,
    normalize,
    singlet_state,
)
from .fit import AsymmetryDataset, Config, FitResult, average_configs, chi2, config_times, fit_lambda, synth_dataset
from .observables import (
    Strangeness,
    TwoTimeOutcome,
    ZetaKind,
    ZetaModel,
    asymmetry_lambda,
    asymmetry_qm,
    asymmetry_zeta,
    prob_lambda,
    prob_zeta,
    zeta_eval,
)
from .qmat import DensityMatrix, herm_eigvals, partial_trace, partial_transpose, tensor

__version__ = "0.1.0"

"""Photon-echo quantum memory simulator for CRIB and AFC storage."""

from .spectral import (AtomEnsemble, CombSpec, SpectralProfile, VoltPerWidthCalibration,
                       make_comb, make_single_line, sample_ensemble, stark_broaden,
                       voltage_to_broadening)
from .echo import (EchoResult, FieldSchedule, Pulse, afc_echo_phase, afc_echo_times,
                   afc_efficiency, compress_stretch_fwhm, crib_efficiency, dipole_sum_oracle,
                   multimode_capacity, simulate_storage)
from .pumping import (MaterialParams, PopulationField, PumpSchedule, decay_profile,
                      evolve_preparation, fluorescence_rate, realized_profile)
from .detection import (CountHistogram, DetectorModel, PhaseNoiseModel, fit_fringe,
                        interference_scan, simulate_counts, snr, visibility_model)

__version__ = "0.1.0"

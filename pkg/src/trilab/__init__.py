"""trilab: singular oscillatory quadrature, peak scaling laws, weight-profile bounds."""

from .boundchain import (ChainRecord, ChainReport, MeanValueConstraint,
                         WeightProfile, assemble_report, dyadic_bound_check,
                         height_interval, max_weighted_sum)
from .harness import (ExperimentConfig, FitResult, PeakStats, fit_power_law,
                      load_config, make_config, peak_stats, run_experiment)
from .kernel import (KernelEvaluator, KernelParams, L1Result,
                     SpectralParameter, main_term, main_term_coefficient,
                     partial_kernel, reduced_kernel, remainder, remainder_l1,
                     symmetrized_main_term, triple_kernel)
from .phase import (CriticalPoint, PhaseDecomposition, airy_ai,
                    classify_regime, find_critical_points,
                    outer_phase_decomposition, predict_pairing)
from .quadrature import (QuadratureResult, QuadratureSettings,
                         SingularityHint, integrate_interval,
                         integrate_periodic, reference_sine_moment)
from .testvectors import (SweepRow, TestVectorSpec, choose_n, default_t_grid,
                          hermitian_form, pairing, reduced_test_function,
                          sweep_both, sweep_hermitian)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]

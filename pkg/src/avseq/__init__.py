"""Anytime-valid sequential inference: e-processes, anytime p-values,
sequential tests and confidence sequences, with exact tree tools and a Monte
Carlo verification harness."""

from .calibrate import Calibrator, Cdf, power_calibrator, randomize, sqrt_calibrator
from .gaussian import (GaussianMartingale, MixtureMartingale, gaussian_cs, mixture_cs,
                       mixture_cs_radius, mixture_log_value)
from .harness import Experiment, SUITES, run_suite
from .instruments import (ConfidenceSequence, EProcess, MeasureFamily, PProcess, SequentialTest,
                          e_to_p, e_to_test, invert_tests_to_cs, p_to_e_calibrated, p_to_test)
from .model import (NEVER, GaussianIID, GaussianPredictableVar, RademacherShifted,
                    SymmetricHeavyTail, TwoPointSymmetric, make_rng, sample_path, sample_paths)
from .report import Check, Report
from .symmetry import (ExpNSM, OddIncrementFactor, dyadic_pvalues, mirror, sign_walk_test,
                       symmetry_center_cs)
from .tree import (FiniteTree, admissibilize_e, admissibilize_p, implied_alternative, read_tree,
                   snell_doob, write_tree)

__version__ = "0.1.0"

"""Binary phase-code discovery for pulse compression radar with a
mismatched-filter receiver: SCR fitness oracle, genetic search, Monte-Carlo
echo validation, and reference baselines.
"""

from .codes import (
    ParseError,
    PhaseCode,
    as_code,
    autocorrelation,
    cross_correlation,
    format_code,
    legendre_code,
    parse_code,
    random_code,
    shifted,
)
from .fitness import (
    FitnessCache,
    FitnessScore,
    build_clutter_matrix,
    cached_fitness,
    fitness,
    fitness_batch,
    matched_filter_scr,
    optimal_filter,
    scr,
)
from .ga import (
    GaConfig,
    GenerationStats,
    Population,
    RunResult,
    crossover,
    elite_select,
    evaluate,
    init_population,
    mutate,
    pad_population,
    prevent_early_convergence,
    run,
    step_generation,
    survival_probability,
    tournament_select,
    tournament_win_probability,
)
from .echo import EchoScenario, TrialResult, empirical_sir, mmf_output, simulate_received, simulate_trial
from .baselines import KnownCode, brute_force_best, known_code, known_codes, random_search

__version__ = "0.1.0"

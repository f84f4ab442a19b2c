"""Noncooperative power control for multiuser multicarrier data networks.

Users pick a transmit power vector over ``D`` carriers to maximize
bits per joule; the best reply puts all power on the single carrier that
needs the least power to reach the optimal SINR ``gamma*``.
"""

__version__ = "0.1.0"

from ._backend import BACKEND
from .analysis import (
    EquilibriumStructure,
    LgdpReport,
    check_lgdp,
    classify_2x2,
    classify_2x2_report,
    equilibrium_powers,
    is_nash,
)
from .channel import ChannelRealization, from_gains, sample_channel
from .dynamics import Trajectory, run, step_async, step_gauss_seidel, step_jacobi
from .efficiency import EfficiencyFunction, GammaStar, deriv, eval_f, gamma_star
from .game import (
    GameConfig,
    Scheme,
    best_carrier_condition,
    best_response,
    required_power,
    sinr,
    utility,
)
from .harness import BatchReport, BatchSpec, run_batch

__all__ = [
    "BACKEND",
    "BatchReport",
    "BatchSpec",
    "ChannelRealization",
    "EfficiencyFunction",
    "EquilibriumStructure",
    "GameConfig",
    "GammaStar",
    "LgdpReport",
    "Scheme",
    "Trajectory",
    "best_carrier_condition",
    "best_response",
    "check_lgdp",
    "classify_2x2",
    "classify_2x2_report",
    "deriv",
    "equilibrium_powers",
    "eval_f",
    "from_gains",
    "gamma_star",
    "is_nash",
    "required_power",
    "run",
    "run_batch",
    "sample_channel",
    "sinr",
    "step_async",
    "step_gauss_seidel",
    "step_jacobi",
    "utility",
]

"""bufmin: exact-arithmetic workbench for online buffer minimization on
conflict graphs (flow and block arrival models)."""

from .adversaries import (AdversaryRun, adv_c4, adv_complete, adv_k3pe_block,
                          adv_k4me, adv_kpartite, fixed_tightness,
                          induced_restriction)
from .block_engine import BlockSim, simulate_block
from .engine import (EngineError, FluidSim, SpeedAssignment, Trace,
                     discretized_simulate, feasible, simulate)
from .graph import ConflictGraph, PartiteSpec, build_named, mu
from .inputs import (BlockInput, FlowInput, StepVectorScript, from_script,
                     normalize)
from .monitors import (check_kpartite, check_linear, check_no_unique_max,
                       check_smooth_clique, invariant_suite)
from .oracle import OfflineSchedule, ZTrajectory, min_buffer, verify_schedule
from .policies import Policy, get_policy, greedy_speeds
from .rational import Q, harmonic, qstr, rat

__all__ = [
    "AdversaryRun", "adv_c4", "adv_complete", "adv_k3pe_block", "adv_k4me",
    "adv_kpartite", "fixed_tightness", "induced_restriction",
    "BlockSim", "simulate_block",
    "EngineError", "FluidSim", "SpeedAssignment", "Trace",
    "discretized_simulate", "feasible", "simulate",
    "ConflictGraph", "PartiteSpec", "build_named", "mu",
    "BlockInput", "FlowInput", "StepVectorScript", "from_script", "normalize",
    "check_kpartite", "check_linear", "check_no_unique_max",
    "check_smooth_clique", "invariant_suite",
    "OfflineSchedule", "ZTrajectory", "min_buffer", "verify_schedule",
    "Policy", "get_policy", "greedy_speeds",
    "Q", "harmonic", "qstr", "rat",
]
__version__ = "0.1.0"

"""Exact moat-growing duals for the bidirected cut relaxation of Steiner tree."""

from .instance import Instance, InstanceError, OracleLimitError, load, save, tmst
from .mergeplan import MergePlan, canonical_plan, scale, trivial_plan, value
from .growth import DualSolution, GrowthTrace, dual_objective, run, simulate
from .subdivide import make_nice, make_well_subdivided
from .goodplan import best_gamma, construct_gamma_plan, gap_bound, relative_greedy
from .gadgets import jump_gadget, lower_bound_instance, three_x_gadget, verify_gadget_lemma
from .oracles import bcr_value, hyp_value, opt_value, oracle_chain
from .kernel import BACKEND

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "DualSolution", "GrowthTrace", "Instance", "InstanceError", "MergePlan",
    "OracleLimitError", "bcr_value", "best_gamma", "canonical_plan", "construct_gamma_plan",
    "dual_objective", "gap_bound", "hyp_value", "jump_gadget", "load", "lower_bound_instance",
    "make_nice", "make_well_subdivided", "opt_value", "oracle_chain", "relative_greedy", "run",
    "save", "scale", "simulate", "three_x_gadget", "tmst", "trivial_plan", "value",
    "verify_gadget_lemma",
]

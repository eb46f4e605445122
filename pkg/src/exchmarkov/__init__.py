"""Exchangeable Markov processes on spaces of countable relational structures, at finite truncations."""
from __future__ import annotations

__version__ = "0.1.0"

from .chain import Trajectory, check_exchangeability, check_projectivity, estimate_transition, run_chain
from .classes import (FiniteClass, canonical_embedding, check_dap, check_hp, check_jep, check_ndap,
                      enumerate_class, get_class, load_class, sample_limit)
from .ctprocess import (CTTrajectory, RankedSimplexPoint, RateMeasure, erosion_measure, jump_rates,
                        kingman_measure, lift_alpha_measure, paintbox_measure, simulate_ct)
from .errors import (CapacityError, DomainError, ExchMarkovError, MalformedInputError, NotFoundError,
                     UnsupportedClassError, ValidationError)
from .kernels import (Kernel, KernelSampler, apply, check_conjugation_invariance, check_consistency, coag_kernel,
                      compose, conjugate, cutpaste_kernel, frag_kernel, kernel_from_target, single_site_resampler)
from .levyito import IntegerPartition, L_hat, Multiset, acts_nontrivially, classify_measure, delta_F, phi_s_alpha
from .limits import (density_exact, density_sampled, limit_vector, project_trajectory, reverse_martingale_check,
                     rho_hat, check_dissociation)
from .structures import (FiniteStructure, Injection, Signature, apply_injection, canonical_form,
                         enumerate_embeddings, is_isomorphic, is_symmetric, restrict, ultrametric)
from .verdict import Verdict

__all__ = [
    "CTTrajectory",
    "CapacityError",
    "DomainError",
    "ExchMarkovError",
    "FiniteClass",
    "FiniteStructure",
    "Injection",
    "IntegerPartition",
    "Kernel",
    "KernelSampler",
    "L_hat",
    "MalformedInputError",
    "Multiset",
    "NotFoundError",
    "RankedSimplexPoint",
    "RateMeasure",
    "Signature",
    "Trajectory",
    "UnsupportedClassError",
    "ValidationError",
    "Verdict",
    "acts_nontrivially",
    "apply",
    "apply_injection",
    "canonical_embedding",
    "canonical_form",
    "check_conjugation_invariance",
    "check_consistency",
    "check_dap",
    "check_dissociation",
    "check_exchangeability",
    "check_hp",
    "check_jep",
    "check_ndap",
    "check_projectivity",
    "classify_measure",
    "coag_kernel",
    "compose",
    "conjugate",
    "cutpaste_kernel",
    "delta_F",
    "density_exact",
    "density_sampled",
    "enumerate_class",
    "enumerate_embeddings",
    "erosion_measure",
    "estimate_transition",
    "frag_kernel",
    "get_class",
    "is_isomorphic",
    "is_symmetric",
    "jump_rates",
    "kernel_from_target",
    "kingman_measure",
    "lift_alpha_measure",
    "limit_vector",
    "load_class",
    "paintbox_measure",
    "phi_s_alpha",
    "project_trajectory",
    "restrict",
    "reverse_martingale_check",
    "rho_hat",
    "run_chain",
    "sample_limit",
    "simulate_ct",
    "single_site_resampler",
    "ultrametric",
]

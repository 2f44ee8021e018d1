"""Confluent Heun solutions through incomplete-Beta and Appell-F1 expansions.

Modules
-------
special      hypergeometric-class evaluators
heun         equation parameters, oracles and auxiliary equations
frobenius    banded recurrences derived from polynomial ODEs
expansions   the six expansion kinds and their constant terms
termination  finite-sum (terminating) solutions
estimator    scikit-learn style wrapper
cli          command-line front end
"""
from .errors import HeunError
from .expansions import (
    EvaluatedExpansion,
    ExpansionSpec,
    c0_closed_form,
    c0_numeric,
    empirical_domain,
    eval_expansion,
    make_spec,
)
from .estimator import HeunExpansion
from .frobenius import LocalRecurrence, LocalSeries, PolyOde, indicial_exponents, local_recurrence, run_recurrence
from .heun import (
    HeunParams,
    build_eq3,
    build_eq25,
    eval_oracle,
    frobenius_heun,
    heun_residual,
    integrate_heun,
    v_from_u,
)
from .special import appell_f1, appell_f1_at_one, gauss_2f1, incomplete_beta, log_gamma
from .termination import (
    alpha_condition,
    certify,
    finite_sum_solution,
    five_term_termination,
    q_polynomial,
    solve_roots,
)

__version__ = "0.1.0"

__all__ = [
    "HeunError",
    "EvaluatedExpansion",
    "ExpansionSpec",
    "c0_closed_form",
    "c0_numeric",
    "empirical_domain",
    "eval_expansion",
    "make_spec",
    "HeunExpansion",
    "LocalRecurrence",
    "LocalSeries",
    "PolyOde",
    "indicial_exponents",
    "local_recurrence",
    "run_recurrence",
    "HeunParams",
    "build_eq3",
    "build_eq25",
    "eval_oracle",
    "frobenius_heun",
    "heun_residual",
    "integrate_heun",
    "v_from_u",
    "appell_f1",
    "appell_f1_at_one",
    "gauss_2f1",
    "incomplete_beta",
    "log_gamma",
    "alpha_condition",
    "certify",
    "finite_sum_solution",
    "five_term_termination",
    "q_polynomial",
    "solve_roots",
]

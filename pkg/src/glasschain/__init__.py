"""Exact correlations and correlation inequalities for the 1D Edwards-Anderson chain."""

from glasschain.chain import (
    CouplingVector,
    ObservableReport,
    bond_correlation,
    brute_force_observables,
    closed_form_observables,
    free_boundary_observables,
    pair_correlation,
    partition_value,
    truncated_correlation,
)
from glasschain.disorder import (
    BondLaw,
    DisorderModel,
    alpha_parameter,
    enumerate_realizations,
    gauge_reduce_ii,
    gauge_reduce_iii,
    monte_carlo_average,
    quenched_average,
)
from glasschain.inequalities import (
    SignVerdict,
    check_first_inequality,
    check_second_inequality,
    critical_alpha_curve,
    g_function,
    monotonicity_check,
)
from glasschain.logsigned import LogSigned

__version__ = "0.1.0"

"""Synthetic graph generation from one observed graph with Stein-operator Glauber dynamics."""

from .ergm import (
    ErgmSpec,
    conditional_probability,
    default_steps,
    glauber_step,
    named_model,
    sample_exact,
    solve_fixed_point,
)
from .estimation import ConditionalTable, estimate_table, update_after_flip
from .graph import Graph, change_statistics, count_statistics, edge_index, flip_edge, hamming
from .kernels import KernelSpec, kernel_eval
from .metrics import batch_fidelity_diversity, degree_tv, reference_values, summary_statistics
from .sampler import GenRunConfig, select_by_gkss, steingen_batch, steingen_generate
from .stein import agrasst_squared, calibrate_and_test, gkss_squared

__version__ = "0.1.0"

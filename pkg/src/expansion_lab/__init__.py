"""Desk-scale laboratory for quantum-walk expansion testing.

Graph machinery, lazy random walks, the evolving set process, a classical
simulation of quantum fast-forwarding and three expansion testers.
"""

from .esp import (
    EspState,
    EspTranscript,
    KernelRow,
    StoppingRule,
    esp_step,
    grow_seed_set,
    kernel_row,
    run_esp,
)
from .graph import (
    Graph,
    GraphSpec,
    NodeSet,
    QueryLedger,
    expansion_bruteforce,
    generate,
    read_edgelist,
    regularize,
    set_conductance,
    set_expansion,
    write_edgelist,
)
from .qff import ChebExpansion, NormEstimate, cheb_coeffs, estimate_norm, fast_forward, norm_exact
from .testers import (
    GRTester,
    QFFTester,
    SeededQFFTester,
    TesterConfig,
    Verdict,
    iteration_params,
    gr_tester,
    qff_tester,
    seeded_qff_tester,
)
from .walks import (
    CoreParams,
    collision_probability,
    diffusion_core,
    stay_probability,
    walk_power,
    walk_step,
)

__version__ = "0.1.0"

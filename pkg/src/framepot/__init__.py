"""Frame-potential estimation for random quantum circuit ensembles.

The package measures how close a circuit ensemble is to Haar randomness by
Monte Carlo sampling of |Tr(U^dag V)|^(2k), evaluating each trace as a
single tensor-network amplitude, and extracting the depth scaling needed to
reach epsilon-approximate k-designs from exponential fits of the decay.
"""
from .circuit import (
    Circuit,
    EnsembleSpec,
    Entangler,
    Family,
    Gate,
    HaarMode,
    adjoint,
    build_hea_instance,
    build_instance,
    build_local_instance,
    build_parallel_instance,
    build_trace_circuit,
)
from .estimator import (
    FramePotentialEstimate,
    TerminationPolicy,
    TraceSample,
    TraceSampleStore,
    epsilon_max,
    frame_potential,
    load_store,
    sample_traces,
    save_store,
)
from .tensornet import (
    EliminationOrder,
    MemoryBoundError,
    TensorNetwork,
    build_network,
    contract_amplitude,
    order_indices,
)

__version__ = "0.1.0"

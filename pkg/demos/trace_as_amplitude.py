"""Traces as single amplitudes.

Tr(U^dag V) for n-qubit circuits U, V is normally a sum over 2^n matrix
elements. Preparing n Bell pairs between ancillas and targets turns the
whole trace into one amplitude of a 2n-qubit circuit:

    <0...0| M^dag (U^dag V on targets) M |0...0>  =  Tr(U^dag V) / 2^n

where M is a Hadamard wall on the ancillas followed by ancilla-to-target
CNOTs. This script builds that circuit for random ensemble instances and
checks it against dense linear algebra.
"""
import numpy as np

from framepot.circuit import (
    Circuit,
    EnsembleSpec,
    Entangler,
    Family,
    build_instance,
    build_trace_circuit,
)
from framepot.oracle import dense_trace
from framepot.tensornet import build_network, contract_amplitude, order_indices

rng = np.random.default_rng(7)

print("identity circuits: amplitude must be exactly 1 (Tr(I)/2^n)")
for n in (1, 3, 6, 10):
    tc = build_trace_circuit(Circuit(n), Circuit(n))
    net = build_network(tc)
    amp = contract_amplitude(net, order_indices(net))
    print(f"  n={n:2d}: amplitude = {amp.real:+.15f}")

print("\nrandom pairs, tensor network vs dense trace:")
for family, kwargs in (
    (Family.PARALLEL, {}),
    (Family.LOCAL, {}),
    (Family.HEA, {"entangler": Entangler.CNOT}),
):
    spec = EnsembleSpec(family, n=4, l=3, **kwargs)
    u = build_instance(spec, rng)
    v = build_instance(spec, rng)
    net = build_network(build_trace_circuit(u, v))
    t_net = 2**spec.n * contract_amplitude(net, order_indices(net))
    t_ref = dense_trace(u, v)
    print(
        f"  {family.value:8s}: Tr = {t_net:+.6f}   "
        f"dense = {t_ref:+.6f}   |diff| = {abs(t_net - t_ref):.2e}"
    )

import numpy as np
import pytest

from framepot import circuit as fc
from framepot import oracle
from framepot.circuit import Circuit, EnsembleSpec, Entangler, Family, build_instance, build_trace_circuit

S2 = 1.0 / np.sqrt(2.0)


def test_empty_circuit_is_identity():
    np.testing.assert_array_equal(oracle.dense_unitary(Circuit(2)), np.eye(4))


def test_hadamard_matrix():
    u = oracle.dense_unitary(Circuit(1, (fc.hadamard(0),)))
    np.testing.assert_allclose(u, np.array([[S2, S2], [S2, -S2]]), atol=1e-15)


def test_wire_zero_is_least_significant():
    # X on wire 0 of a 2-qubit register maps |00> to |01> = index 1
    u = oracle.dense_unitary(Circuit(2, (fc.pauli_x(0),)))
    assert abs(u[1, 0] - 1.0) < 1e-15
    u = oracle.dense_unitary(Circuit(2, (fc.pauli_x(1),)))
    assert abs(u[2, 0] - 1.0) < 1e-15


def test_unitarity_of_random_hea(rng):
    spec = EnsembleSpec(Family.HEA, n=4, l=3, entangler=Entangler.CNOT)
    for _ in range(3):
        u = oracle.dense_unitary(build_instance(spec, rng))
        np.testing.assert_allclose(u.conj().T @ u, np.eye(16), atol=1e-10)


def test_bell_amplitude():
    bell = Circuit(2, (fc.hadamard(0), fc.cnot(0, 1)))
    assert abs(oracle.dense_amplitude(bell, 0, 0) - S2) < 1e-15
    assert abs(oracle.dense_amplitude(bell, 0, 3) - S2) < 1e-15
    assert abs(oracle.dense_amplitude(bell, 0, 1)) < 1e-15


def test_amplitude_of_empty_circuit():
    assert oracle.dense_amplitude(Circuit(3), 0, 0) == 1.0
    assert oracle.dense_amplitude(Circuit(3), 0, 5) == 0.0


def test_amplitude_accepts_bit_lists():
    c = Circuit(2, (fc.pauli_x(1),))
    assert abs(oracle.dense_amplitude(c, [0, 0], [0, 1]) - 1.0) < 1e-15


def test_trace_of_self_is_dimension(rng):
    spec = EnsembleSpec(Family.PARALLEL, n=3, l=2)
    u = build_instance(spec, rng)
    assert abs(oracle.dense_trace(u, u) - 8.0) < 1e-9


def test_trace_of_cnot():
    ident = Circuit(2)
    v = Circuit(2, (fc.cnot(0, 1),))
    assert abs(oracle.dense_trace(ident, v) - 2.0) < 1e-12


def test_trace_conjugate_symmetry(rng):
    spec = EnsembleSpec(Family.LOCAL, n=3, l=3)
    for _ in range(5):
        u = build_instance(spec, rng)
        v = build_instance(spec, rng)
        t1 = oracle.dense_trace(u, v)
        t2 = oracle.dense_trace(v, u)
        assert abs(t1 - np.conj(t2)) < 1e-9


def test_trace_norm_bound(rng):
    spec = EnsembleSpec(Family.PARALLEL, n=2, l=1)
    for _ in range(1000):
        u = build_instance(spec, rng)
        v = build_instance(spec, rng)
        assert abs(oracle.dense_trace(u, v)) <= 4.0 + 1e-9


def test_trace_equals_trace_circuit_amplitude(rng):
    for n in range(2, 6):
        spec = EnsembleSpec(Family.PARALLEL, n=n, l=2)
        u = build_instance(spec, rng)
        v = build_instance(spec, rng)
        amp = oracle.dense_amplitude(build_trace_circuit(u, v), 0, 0)
        ref = oracle.dense_trace(u, v) / 2**n
        assert abs(amp - ref) <= 1e-9 * max(abs(ref), 1.0)


def test_size_refusals():
    with pytest.raises(ValueError):
        oracle.dense_unitary(Circuit(13))
    with pytest.raises(ValueError):
        oracle.dense_trace(Circuit(11), Circuit(11))
    with pytest.raises(ValueError):
        oracle.dense_trace(Circuit(2), Circuit(3))

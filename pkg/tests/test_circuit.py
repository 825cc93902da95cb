import math

import numpy as np
import pytest

from framepot import circuit as fc
from framepot import oracle
from framepot.circuit import (
    Circuit,
    EnsembleSpec,
    Entangler,
    Family,
    adjoint,
    build_hea_instance,
    build_instance,
    build_local_instance,
    build_parallel_instance,
    build_trace_circuit,
)
from conftest import ALL_FAMILIES, random_circuit


def test_parallel_even_layer_pairs():
    spec = EnsembleSpec(Family.PARALLEL, n=4, l=1)
    c = build_parallel_instance(spec, np.random.default_rng(0))
    assert [g.wires for g in c.gates] == [(0, 1), (2, 3)]


def test_parallel_odd_layer_offset():
    spec = EnsembleSpec(Family.PARALLEL, n=4, l=2)
    c = build_parallel_instance(spec, np.random.default_rng(0))
    assert [g.wires for g in c.gates] == [(0, 1), (2, 3), (1, 2)]


def test_parallel_single_gate_at_n2():
    c = build_parallel_instance(EnsembleSpec(Family.PARALLEL, n=2, l=1), np.random.default_rng(1))
    assert len(c.gates) == 1 and c.gates[0].kind == fc.KIND_U4


def test_parallel_gate_count_formula(rng):
    for _ in range(20):
        n = int(rng.integers(2, 12))
        l = int(rng.integers(1, 8))
        c = build_parallel_instance(EnsembleSpec(Family.PARALLEL, n=n, l=l), rng)
        expected = sum((n - (j % 2)) // 2 for j in range(l))
        assert len(c.gates) == expected


def test_local_only_pair_at_n2():
    c = build_local_instance(EnsembleSpec(Family.LOCAL, n=2, l=5), np.random.default_rng(2))
    assert len(c.gates) == 5
    assert all(g.wires == (0, 1) for g in c.gates)


def test_local_gate_count_independent_of_n():
    c = build_local_instance(EnsembleSpec(Family.LOCAL, n=10, l=1), np.random.default_rng(3))
    assert len(c.gates) == 1


def test_local_pair_choice_uniform():
    # n=3 has two candidate pairs; (0,1) should appear half the time
    c = build_local_instance(EnsembleSpec(Family.LOCAL, n=3, l=10_000), np.random.default_rng(4))
    freq = sum(g.wires == (0, 1) for g in c.gates) / len(c.gates)
    assert abs(freq - 0.5) < 0.02


def test_hea_gate_count():
    spec = EnsembleSpec(Family.HEA, n=4, l=1, entangler=Entangler.CNOT)
    c = build_hea_instance(spec, np.random.default_rng(5))
    assert len(c.gates) == 11  # 4 RY + 4 rotations + 2 + 1 entanglers
    assert all(g.kind == fc.KIND_RY and g.angle == math.pi / 4 for g in c.gates[:4])


def test_hea_two_entangler_walls_per_layer():
    spec = EnsembleSpec(Family.HEA, n=4, l=2, entangler=Entangler.CZ)
    c = build_hea_instance(spec, np.random.default_rng(6))
    rotations = {fc.KIND_RX, fc.KIND_RY, fc.KIND_RZ}
    layer = c.gates[4:]
    per_layer = len(layer) // 2
    for start in (0, per_layer):
        seg = layer[start : start + per_layer]
        assert all(g.kind in rotations for g in seg[:4])
        walls = seg[4:]
        assert all(g.kind == fc.KIND_CZ for g in walls)
        assert [g.wires for g in walls] == [(0, 1), (2, 3), (1, 2)]


def test_hea_requires_entangler():
    with pytest.raises(ValueError):
        EnsembleSpec(Family.HEA, n=4, l=1)


def test_ensemble_spec_validation():
    with pytest.raises(ValueError):
        EnsembleSpec(Family.PARALLEL, n=1, l=1)
    with pytest.raises(ValueError):
        EnsembleSpec(Family.PARALLEL, n=4, l=0)
    with pytest.raises(ValueError):
        EnsembleSpec(Family.PARALLEL, n=4, l=1, q=3)


def test_all_gates_nearest_neighbor(rng):
    for family, ent in ALL_FAMILIES:
        for _ in range(5):
            c = random_circuit(rng, family, ent)
            for g in c.gates:
                if len(g.wires) == 2:
                    assert abs(g.wires[0] - g.wires[1]) == 1


def test_hea_rotation_angles_in_range(rng):
    c = build_hea_instance(
        EnsembleSpec(Family.HEA, n=5, l=6, entangler=Entangler.CNOT), rng
    )
    for g in c.gates:
        if g.angle is not None:
            assert 0.0 <= g.angle < 2 * math.pi


def test_adjoint_involution(rng):
    for family, ent in ALL_FAMILIES:
        c = random_circuit(rng, family, ent)
        assert adjoint(adjoint(c)) == c


def test_adjoint_rotation_negates_angle():
    c = Circuit(1, (fc.rot_z(0, 1.25),))
    assert adjoint(c).gates[0].angle == -1.25


def test_adjoint_matches_dense_dagger(rng):
    for family, ent in ALL_FAMILIES:
        for _ in range(3):
            c = random_circuit(rng, family, ent, n_max=4, l_max=4)
            u = oracle.dense_unitary(c)
            ua = oracle.dense_unitary(adjoint(c))
            np.testing.assert_allclose(ua, u.conj().T, atol=1e-12)


def test_rotation_convention():
    # R_Z(theta) = exp(-i theta Z / 2) has trace 2 cos(theta/2)
    theta = 0.731
    tr = np.trace(fc.gate_matrix(fc.rot_z(0, theta)))
    assert abs(tr - 2 * math.cos(theta / 2)) < 1e-15


def test_gate_validation():
    with pytest.raises(ValueError):
        fc.rot_x(0, float("nan"))
    with pytest.raises(ValueError):
        fc.rot_x(0, 7.0)  # outside (-2*pi, 2*pi)
    with pytest.raises(ValueError):
        fc.cnot(1, 1)
    with pytest.raises(ValueError):
        fc.two_qubit(0, 1, np.eye(4) * 2.0)  # not unitary
    with pytest.raises(ValueError):
        Circuit(2, (fc.hadamard(5),))


def test_trace_circuit_identity_amplitude():
    ident = Circuit(3)
    tc = build_trace_circuit(ident, ident)
    assert tc.n == 6
    amp = oracle.dense_amplitude(tc, 0, 0)
    assert abs(amp - 1.0) < 1e-12  # Tr(I)/2^3 = 1


def test_trace_circuit_pauli_x():
    u = Circuit(1)
    v = Circuit(1, (fc.pauli_x(0),))
    amp = oracle.dense_amplitude(build_trace_circuit(u, v), 0, 0)
    assert abs(amp) < 1e-12  # Tr(X) = 0


def test_trace_circuit_matches_dense_trace(rng):
    spec = EnsembleSpec(Family.PARALLEL, n=4, l=3)
    for _ in range(5):
        u = build_instance(spec, rng)
        v = build_instance(spec, rng)
        amp = oracle.dense_amplitude(build_trace_circuit(u, v), 0, 0)
        ref = oracle.dense_trace(u, v)
        assert abs(2**4 * amp - ref) <= 1e-9 * max(abs(ref), 1.0)


def test_trace_circuit_rejects_mismatched_sizes():
    with pytest.raises(ValueError):
        build_trace_circuit(Circuit(2), Circuit(3))


def test_trace_bound(rng):
    spec = EnsembleSpec(Family.PARALLEL, n=3, l=2)
    for _ in range(50):
        u = build_instance(spec, rng)
        v = build_instance(spec, rng)
        assert abs(oracle.dense_trace(u, v)) <= 2**3 + 1e-9


def test_text_round_trip(rng):
    for family, ent in ALL_FAMILIES:
        c = random_circuit(rng, family, ent, n_max=4, l_max=3)
        back = fc.from_text(fc.to_text(c))
        assert back == c


def test_text_round_trip_preserves_amplitudes(rng):
    c = random_circuit(rng, Family.HEA, Entangler.CNOT, n_max=3, l_max=2)
    back = fc.from_text(fc.to_text(c))
    np.testing.assert_allclose(
        oracle.dense_unitary(back), oracle.dense_unitary(c), atol=0
    )


def test_text_rejects_garbage():
    with pytest.raises(ValueError):
        fc.from_text("no header\nH 0\n")
    with pytest.raises(ValueError):
        fc.from_text("n=2\nU4 0,1 1.0,0.0\n")  # truncated matrix

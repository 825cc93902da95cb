"""Dense brute-force references for small circuits.

Everything here is deliberately simple: statevector evolution and explicit
matrix products, capped at sizes where they are unquestionably cheap. These
functions are the independent side of every cross-check in the test suite,
so they share no code with the tensor-network contraction path.
"""
from __future__ import annotations

import numpy as np

from .circuit import Circuit, gate_matrix

MAX_QUBITS_MATRIX = 12
MAX_QUBITS_TRACE = 10


def _axis(wire: int, n: int) -> int:
    # wire 0 is the least significant bit, i.e. the last reshape axis
    return n - 1 - wire


def _apply_gate(state: np.ndarray, matrix: np.ndarray, wires: tuple[int, ...], n: int) -> np.ndarray:
    """Apply a 2x2 or 4x4 matrix on the given wires of a [2]*n(+extra) array."""
    axes = [_axis(w, n) for w in wires]
    k = len(wires)
    op = matrix.reshape((2,) * (2 * k))
    # tensordot contracts the gate's input axes against the state's wire axes,
    # then the output axes are moved back into place.
    moved = np.tensordot(op, state, axes=(tuple(range(k, 2 * k)), axes))
    return np.moveaxis(moved, tuple(range(k)), axes)


def _evolve(c: Circuit, state: np.ndarray) -> np.ndarray:
    for g in c.gates:
        state = _apply_gate(state, gate_matrix(g), g.wires, c.n)
    return state


def dense_unitary(c: Circuit) -> np.ndarray:
    """Full 2^n x 2^n matrix of the circuit. Refuses n > 12."""
    if c.n > MAX_QUBITS_MATRIX:
        raise ValueError(f"dense_unitary supports at most {MAX_QUBITS_MATRIX} qubits")
    dim = 2**c.n
    state = np.eye(dim, dtype=complex).reshape([2] * c.n + [dim])
    return _evolve(c, state).reshape(dim, dim)


def dense_amplitude(c: Circuit, in_bits=0, out_bits=0) -> complex:
    """<out|C|in> by statevector evolution; bit masks use wire 0 = LSB."""
    if c.n > MAX_QUBITS_MATRIX:
        raise ValueError(f"dense_amplitude supports at most {MAX_QUBITS_MATRIX} qubits")
    in_idx = _bits_to_index(in_bits, c.n)
    out_idx = _bits_to_index(out_bits, c.n)
    state = np.zeros(2**c.n, dtype=complex)
    state[in_idx] = 1.0
    state = _evolve(c, state.reshape([2] * c.n)).reshape(-1)
    return complex(state[out_idx])


def _bits_to_index(bits, n: int) -> int:
    if isinstance(bits, int):
        if bits < 0 or bits >= 2**n:
            raise ValueError("basis index out of range")
        return bits
    bits = list(bits)
    if len(bits) != n:
        raise ValueError(f"need {n} bits")
    return sum(int(b) << w for w, b in enumerate(bits))


def dense_trace(u: Circuit, v: Circuit) -> complex:
    """Tr(U^dag V) from the full matrices. Refuses n > 10."""
    if u.n != v.n:
        raise ValueError("qubit counts differ")
    if u.n > MAX_QUBITS_TRACE:
        raise ValueError(f"dense_trace supports at most {MAX_QUBITS_TRACE} qubits")
    return complex(np.einsum("ij,ij->", dense_unitary(u).conj(), dense_unitary(v)))

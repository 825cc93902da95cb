"""Circuit IR, gate set, ensemble generators, and trace-circuit construction.

Conventions used throughout the package:

- Wires are numbered 0..n-1 and wire 0 is the least significant bit of a
  computational-basis index.
- A two-qubit gate matrix acts on the 4-dimensional space indexed by
  2*x_first + x_second, i.e. the first listed wire is the high bit of the
  gate-local index. CNOT(control, target) is therefore the textbook
  [[1,0,0,0],[0,1,0,0],[0,0,0,1],[0,0,1,0]].
- Rotations follow R_P(theta) = exp(-i*theta*P/2), so Tr(RZ(theta)) is
  2*cos(theta/2). Note the 4*pi periodicity: adding 2*pi to an angle flips
  the sign of the matrix, which is why adjoints negate angles instead of
  wrapping them back into [0, 2*pi).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

TWO_PI = 2.0 * math.pi

_S2 = 1.0 / math.sqrt(2.0)
_H = np.array([[_S2, _S2], [_S2, -_S2]], dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
_CZ = np.diag([1, 1, 1, -1]).astype(complex)

# Gate kinds, also the tokens of the text serialization format.
KIND_H = "H"
KIND_X = "X"
KIND_CNOT = "CNOT"
KIND_CZ = "CZ"
KIND_RX = "RX"
KIND_RY = "RY"
KIND_RZ = "RZ"
KIND_U4 = "U4"

_ROTATIONS = (KIND_RX, KIND_RY, KIND_RZ)
_TWO_QUBIT = (KIND_CNOT, KIND_CZ, KIND_U4)
_SELF_ADJOINT = (KIND_H, KIND_X, KIND_CNOT, KIND_CZ)


class Family(str, Enum):
    PARALLEL = "parallel"
    LOCAL = "local"
    HEA = "hea"


class Entangler(str, Enum):
    CNOT = "cnot"
    CZ = "cz"


class HaarMode(str, Enum):
    GINIBRE_QR = "ginibre_qr"
    PHASE_PARAM = "phase_param"


@dataclass(frozen=True, eq=False)
class Gate:
    """One gate application: a kind, the wires it acts on, and its parameter."""

    kind: str
    wires: tuple[int, ...]
    angle: float | None = None
    matrix: np.ndarray | None = None

    def __post_init__(self):
        if self.kind in (KIND_H, KIND_X):
            if len(self.wires) != 1:
                raise ValueError(f"{self.kind} takes one wire")
        elif self.kind in _ROTATIONS:
            if len(self.wires) != 1:
                raise ValueError(f"{self.kind} takes one wire")
            if self.angle is None or not math.isfinite(self.angle):
                raise ValueError(f"{self.kind} needs a finite angle")
            if not -TWO_PI < self.angle < TWO_PI:
                raise ValueError("rotation angle must lie in (-2*pi, 2*pi)")
        elif self.kind in (KIND_CNOT, KIND_CZ):
            if len(self.wires) != 2 or self.wires[0] == self.wires[1]:
                raise ValueError(f"{self.kind} takes two distinct wires")
        elif self.kind == KIND_U4:
            if len(self.wires) != 2 or self.wires[0] == self.wires[1]:
                raise ValueError("U4 takes two distinct wires")
            m = self.matrix
            if m is None or m.shape != (4, 4):
                raise ValueError("U4 needs a 4x4 matrix")
            if not np.allclose(m.conj().T @ m, np.eye(4), atol=1e-12):
                raise ValueError("U4 matrix is not unitary within 1e-12")
            m = np.ascontiguousarray(m, dtype=complex)
            m.setflags(write=False)
            object.__setattr__(self, "matrix", m)
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")

    def __eq__(self, other):
        if not isinstance(other, Gate):
            return NotImplemented
        if (self.kind, self.wires, self.angle) != (other.kind, other.wires, other.angle):
            return False
        if self.matrix is None:
            return other.matrix is None
        return other.matrix is not None and np.array_equal(self.matrix, other.matrix)


def hadamard(wire: int) -> Gate:
    return Gate(KIND_H, (wire,))


def pauli_x(wire: int) -> Gate:
    return Gate(KIND_X, (wire,))


def cnot(control: int, target: int) -> Gate:
    return Gate(KIND_CNOT, (control, target))


def cz(a: int, b: int) -> Gate:
    return Gate(KIND_CZ, (a, b))


def rot_x(wire: int, angle: float) -> Gate:
    return Gate(KIND_RX, (wire,), angle=angle)


def rot_y(wire: int, angle: float) -> Gate:
    return Gate(KIND_RY, (wire,), angle=angle)


def rot_z(wire: int, angle: float) -> Gate:
    return Gate(KIND_RZ, (wire,), angle=angle)


def two_qubit(a: int, b: int, matrix: np.ndarray) -> Gate:
    return Gate(KIND_U4, (a, b), matrix=matrix)


def gate_matrix(gate: Gate) -> np.ndarray:
    """Dense matrix of a gate (2x2 or 4x4), in the conventions above."""
    if gate.kind == KIND_H:
        return _H
    if gate.kind == KIND_X:
        return _X
    if gate.kind == KIND_CNOT:
        return _CNOT
    if gate.kind == KIND_CZ:
        return _CZ
    if gate.kind == KIND_RX:
        c, s = math.cos(gate.angle / 2), math.sin(gate.angle / 2)
        return np.array([[c, -1j * s], [-1j * s, c]])
    if gate.kind == KIND_RY:
        c, s = math.cos(gate.angle / 2), math.sin(gate.angle / 2)
        return np.array([[c, -s], [s, c]], dtype=complex)
    if gate.kind == KIND_RZ:
        p = np.exp(-0.5j * gate.angle)
        return np.array([[p, 0], [0, p.conjugate()]])
    return gate.matrix


def adjoint_gate(gate: Gate) -> Gate:
    if gate.kind in _SELF_ADJOINT:
        return gate
    if gate.kind in _ROTATIONS:
        return Gate(gate.kind, gate.wires, angle=-gate.angle)
    return Gate(KIND_U4, gate.wires, matrix=gate.matrix.conj().T)


@dataclass(frozen=True, eq=False)
class Circuit:
    """An ordered gate list over n named wires. Immutable once built."""

    n: int
    gates: tuple[Gate, ...] = ()

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("circuit needs at least one wire")
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if any(w < 0 or w >= self.n for w in g.wires):
                raise ValueError(f"gate {g.kind} wires {g.wires} exceed n={self.n}")

    def __eq__(self, other):
        if not isinstance(other, Circuit):
            return NotImplemented
        return self.n == other.n and self.gates == other.gates

    def __len__(self):
        return len(self.gates)


def adjoint(c: Circuit) -> Circuit:
    """Conjugate-transpose circuit: reversed gate order, each gate adjointed."""
    return Circuit(c.n, tuple(adjoint_gate(g) for g in reversed(c.gates)))


def _shift(c: Circuit, offset: int) -> list[Gate]:
    return [
        Gate(g.kind, tuple(w + offset for w in g.wires), angle=g.angle, matrix=g.matrix)
        for g in c.gates
    ]


def build_trace_circuit(u: Circuit, v: Circuit) -> Circuit:
    """Trace-as-amplitude circuit on 2n qubits.

    Ancillas are wires 0..n-1, targets n..2n-1. A Hadamard+CNOT wall turns
    the all-zeros state into n Bell pairs; V then the adjoint of U act on
    the targets; the mirrored wall maps back. The all-zeros-to-all-zeros
    amplitude of the result is Tr(U^dag V) / 2^n.
    """
    if u.n != v.n:
        raise ValueError(f"qubit counts differ: {u.n} != {v.n}")
    n = u.n
    gates: list[Gate] = []
    gates += [hadamard(a) for a in range(n)]
    gates += [cnot(a, n + a) for a in range(n)]
    gates += _shift(v, n)
    gates += _shift(adjoint(u), n)
    gates += [cnot(a, n + a) for a in range(n)]
    gates += [hadamard(a) for a in range(n)]
    return Circuit(2 * n, tuple(gates))


@dataclass(frozen=True)
class EnsembleSpec:
    """Which random-circuit family to draw from, and at what size."""

    family: Family
    n: int
    l: int
    q: int = 2
    entangler: Entangler | None = None
    haar_mode: HaarMode = HaarMode.GINIBRE_QR

    def __post_init__(self):
        if self.q != 2:
            raise ValueError("only local dimension q=2 is executable")
        if self.n < 2:
            raise ValueError("ensembles need n >= 2")
        if self.l < 1:
            raise ValueError("ensembles need l >= 1")
        if self.family == Family.HEA and self.entangler is None:
            raise ValueError("hardware-efficient family needs an entangler")


def _haar_gate(rng: np.random.Generator, mode: HaarMode) -> np.ndarray:
    # Local import: haar depends on nothing here, but circuit is imported first.
    from . import haar

    if mode == HaarMode.PHASE_PARAM:
        return haar.sample_phase_parameterized(rng)
    return haar.sample_haar_two_qubit(rng)


def parallel_layer_pairs(n: int, layer: int) -> list[tuple[int, int]]:
    """Brickwork pairs for one layer: offset alternates 0, 1, 0, ..."""
    start = layer % 2
    return [(i, i + 1) for i in range(start, n - 1, 2)]


def build_parallel_instance(spec: EnsembleSpec, rng: np.random.Generator) -> Circuit:
    """Brickwork of independent Haar two-qubit gates, open boundary."""
    if spec.family != Family.PARALLEL:
        raise ValueError("spec is not for the parallel family")
    gates = []
    for layer in range(spec.l):
        for a, b in parallel_layer_pairs(spec.n, layer):
            gates.append(two_qubit(a, b, _haar_gate(rng, spec.haar_mode)))
    return Circuit(spec.n, tuple(gates))


def build_local_instance(spec: EnsembleSpec, rng: np.random.Generator) -> Circuit:
    """One Haar two-qubit gate per layer on a uniformly random adjacent pair."""
    if spec.family != Family.LOCAL:
        raise ValueError("spec is not for the local family")
    gates = []
    for _ in range(spec.l):
        i = int(rng.integers(0, spec.n - 1))
        gates.append(two_qubit(i, i + 1, _haar_gate(rng, spec.haar_mode)))
    return Circuit(spec.n, tuple(gates))


def build_hea_instance(spec: EnsembleSpec, rng: np.random.Generator) -> Circuit:
    """Hardware-efficient ansatz.

    An initial wall of RY(pi/4), then per layer: an independently drawn
    rotation on every qubit (axis uniform over X/Y/Z, angle uniform over
    [0, 2*pi)), an entangler wall on even pairs, and an entangler wall on
    odd pairs. The rng is consumed qubit by qubit, axis before angle.
    """
    if spec.family != Family.HEA:
        raise ValueError("spec is not for the hardware-efficient family")
    if spec.entangler is None:
        raise ValueError("hardware-efficient family needs an entangler")
    ent = cnot if spec.entangler == Entangler.CNOT else cz
    rot = (rot_x, rot_y, rot_z)
    n = spec.n
    gates = [rot_y(q, math.pi / 4) for q in range(n)]
    for _ in range(spec.l):
        for q in range(n):
            axis = int(rng.integers(0, 3))
            angle = float(rng.uniform(0.0, TWO_PI))
            gates.append(rot[axis](q, angle))
        gates += [ent(i, i + 1) for i in range(0, n - 1, 2)]
        gates += [ent(i, i + 1) for i in range(1, n - 1, 2)]
    return Circuit(n, tuple(gates))


_BUILDERS = {
    Family.PARALLEL: build_parallel_instance,
    Family.LOCAL: build_local_instance,
    Family.HEA: build_hea_instance,
}


def build_instance(spec: EnsembleSpec, rng: np.random.Generator) -> Circuit:
    """Draw one circuit from the ensemble."""
    return _BUILDERS[spec.family](spec, rng)


def to_text(c: Circuit) -> str:
    """Line-oriented text form: header ``n=<int>``, one gate per line."""
    lines = [f"n={c.n}"]
    for g in c.gates:
        wires = ",".join(str(w) for w in g.wires)
        if g.kind in _ROTATIONS:
            lines.append(f"{g.kind} {wires} {float(g.angle)!r}")
        elif g.kind == KIND_U4:
            entries = " ".join(
                f"{float(z.real)!r},{float(z.imag)!r}" for z in g.matrix.reshape(-1)
            )
            lines.append(f"{g.kind} {wires} {entries}")
        else:
            lines.append(f"{g.kind} {wires}")
    return "\n".join(lines) + "\n"


def from_text(text: str) -> Circuit:
    lines = [ln for ln in (s.strip() for s in text.splitlines()) if ln]
    if not lines or not lines[0].startswith("n="):
        raise ValueError("circuit text must start with an n=<int> header")
    n = int(lines[0][2:])
    gates = []
    for ln in lines[1:]:
        parts = ln.split()
        kind = parts[0]
        wires = tuple(int(w) for w in parts[1].split(","))
        if kind in _ROTATIONS:
            gates.append(Gate(kind, wires, angle=float(parts[2])))
        elif kind == KIND_U4:
            if len(parts) != 18:
                raise ValueError(f"U4 line needs 16 re,im entries: {ln!r}")
            vals = [complex(*map(float, p.split(","))) for p in parts[2:]]
            gates.append(Gate(kind, wires, matrix=np.array(vals).reshape(4, 4)))
        else:
            gates.append(Gate(kind, wires))
    return Circuit(n, tuple(gates))

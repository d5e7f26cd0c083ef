"""Hadamard-test circuits for estimating tr(rho cos(rho t)).

Three levels of fidelity are covered:

* closed-form controlled swap-exponentials (``swap_exp_exact``),
* the two-ancilla block-encoding of the swap-exponential and its
  amplification to an exact embedded unitary (``lcu_module``,
  ``amplification_operator``),
* a full decomposition of the controlled, amplified operator into
  primitive one- and two-qubit gates (``controlled_amplification_gates``).

The segmented simulation in ``hadamard_test_expectation`` keeps only the
measure and main registers alive: each time slice appends a fresh copy of
the state, applies the controlled interaction, and traces the spent copy
out again, so the circuit width never grows with the slice count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import BadDt
from .states import DensityMatrix, Tolerances, DEFAULT_TOL

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_T = np.diag([1, np.exp(1j * np.pi / 4)])
_S = np.diag([1, 1j])


def _ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _rz(theta: float) -> np.ndarray:
    return np.diag([np.exp(-1j * theta / 2), np.exp(1j * theta / 2)])


@dataclass(frozen=True)
class Gate:
    """One primitive gate; qubits are (controls..., target) where relevant."""

    kind: str
    qubits: tuple
    theta: float | None = None


@dataclass(frozen=True)
class GateList:
    """Ordered gate sequence over a fixed-width register file."""

    gates: tuple
    qubit_count: int

    def __len__(self) -> int:
        return len(self.gates)

    def to_text(self) -> str:
        """One gate per line: ``KIND q0 [q1 [q2]] [theta]``."""
        lines = []
        for g in self.gates:
            parts = [g.kind] + [str(q) for q in g.qubits]
            if g.theta is not None:
                parts.append(repr(g.theta))
            lines.append(" ".join(parts))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class RegisterLayout:
    """Qubit indices for the decomposed circuit.

    Order: measure qubit, work qubit for the doubly-controlled swaps, two
    block-encoding ancillas, then the main and copy registers (n each).
    """

    n: int
    measure: int = 0
    work: int = 1
    anc1: int = 2
    anc2: int = 3

    @property
    def main(self) -> tuple:
        return tuple(range(4, 4 + self.n))

    @property
    def copy(self) -> tuple:
        return tuple(range(4 + self.n, 4 + 2 * self.n))

    @property
    def total(self) -> int:
        return 4 + 2 * self.n


def gate_matrix(gate: Gate) -> np.ndarray:
    """Dense matrix of one gate on its own qubits (controls first)."""
    kind = gate.kind
    if kind == "H":
        return _H
    if kind == "X":
        return _X
    if kind == "Z":
        return _Z
    if kind == "T":
        return _T
    if kind == "S":
        return _S
    if kind == "RY":
        return _ry(gate.theta)
    if kind == "RZ":
        return _rz(gate.theta)
    if kind == "CNOT":
        return _controlled(_X)
    if kind == "CZ":
        return _controlled(_Z)
    if kind == "CS":
        return _controlled(_S)
    if kind == "CRY":
        return _controlled(_ry(gate.theta))
    if kind == "TOFFOLI":
        return _controlled(_controlled(_X))
    raise ValueError(f"unknown gate kind {kind!r}")


def _controlled(u: np.ndarray) -> np.ndarray:
    d = u.shape[0]
    out = np.eye(2 * d, dtype=complex)
    out[d:, d:] = u
    return out


def permute_qubits(mat: np.ndarray, source: list) -> np.ndarray:
    """Reorder tensor factors: output qubit j is input qubit source[j].

    Qubit 0 is the most significant bit of the basis index.
    """
    nq = len(source)
    idx = np.arange(mat.shape[0])
    gather = np.zeros_like(idx)
    for j, src in enumerate(source):
        bits = (idx >> (nq - 1 - j)) & 1
        gather |= bits << (nq - 1 - src)
    return mat[np.ix_(gather, gather)]


def expand_gate(small: np.ndarray, qubits, nq: int) -> np.ndarray:
    """Embed a k-qubit operator acting on `qubits` into an nq-qubit space."""
    k = len(qubits)
    rest = [q for q in range(nq) if q not in qubits]
    cur = list(qubits) + rest  # ordering of kron(small, I_rest)
    full = np.kron(small, np.eye(2 ** (nq - k), dtype=complex))
    source = [cur.index(j) for j in range(nq)]
    return permute_qubits(full, source)


def assemble_unitary(gl: GateList) -> np.ndarray:
    """Multiply the gate list into one matrix (first gate applied first)."""
    dim = 2**gl.qubit_count
    total = np.eye(dim, dtype=complex)
    for g in gl.gates:
        total = expand_gate(gate_matrix(g), g.qubits, gl.qubit_count) @ total
    return total


def apply_gates(rho_mat: np.ndarray, gl: GateList) -> np.ndarray:
    """Conjugate a density matrix by each gate in order."""
    out = rho_mat
    for g in gl.gates:
        u = expand_gate(gate_matrix(g), g.qubits, gl.qubit_count)
        out = u @ out @ u.conj().T
    return out


def partial_trace(mat: np.ndarray, keep, nq: int) -> np.ndarray:
    """Trace out all qubits not in `keep` (result ordered as sorted keep)."""
    keep = sorted(keep)
    tensor = mat.reshape((2,) * (2 * nq))
    row = [q if q in keep else 2 * nq + q for q in range(nq)]
    col = [nq + q if q in keep else 2 * nq + q for q in range(nq)]
    out_axes = [q for q in keep] + [nq + q for q in keep]
    d = 2 ** len(keep)
    return np.einsum(tensor, row + col, out_axes).reshape(d, d)


def swap_matrix(n: int) -> np.ndarray:
    """Exchange of two n-qubit registers (dimension 4^n)."""
    d = 2**n
    out = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            out[j * d + i, i * d + j] = 1.0
    return out


def swap_exp_exact(n: int, dt: float) -> np.ndarray:
    """cos(dt) I - i sin(dt) SWAP: the exact register-swap exponential.

    The closed form holds for every dt because the swap squares to the
    identity.
    """
    d2 = 4**n
    return np.cos(dt) * np.eye(d2, dtype=complex) - 1j * np.sin(dt) * swap_matrix(n)


def _rotation_angles(dt: float):
    cos_dt = math.cos(dt)
    if cos_dt <= 0:
        raise BadDt(f"cos(dt) = {cos_dt:.3e} <= 0 at dt = {dt}; use more time slices")
    norm = cos_dt + abs(math.sin(dt))
    theta1 = 2 * math.acos(norm / 2)
    theta2 = 2 * math.acos(math.sqrt(cos_dt / norm))
    return theta1, theta2


def lcu_module(n: int, dt: float) -> np.ndarray:
    """Two-ancilla unitary whose |00> block is exp(-i SWAP dt) / 2.

    Composed of a preparation rotation on the first ancilla, an
    anti-controlled rotation on the second, the ancilla-selected
    (-i sgn) SWAP, and the second rotation undone.
    """
    theta1, theta2 = _rotation_angles(dt)
    d2 = 4**n
    eye = np.eye(d2, dtype=complex)
    p0 = np.diag([1, 0]).astype(complex)
    p1 = np.diag([0, 1]).astype(complex)
    phase = -1j if dt > 0 else 1j
    r1_full = np.kron(_ry(theta1), np.eye(2 * d2, dtype=complex))
    oc_r2 = np.kron(p0, np.kron(_ry(theta2), eye)) + np.kron(p1, np.kron(np.eye(2), eye))
    select = np.kron(np.eye(2), np.kron(p0, eye) + np.kron(p1, phase * swap_matrix(n)))
    r2_dag = np.kron(np.eye(2), np.kron(_ry(theta2).conj().T, eye))
    return r2_dag @ select @ oc_r2 @ r1_full


def amplification_operator(n: int, dt: float) -> np.ndarray:
    """-W (I-2P) W^dag (I-2P) W for W = lcu_module(n, dt), P = |00><00| x I.

    Restricted to ancillas in |00> this equals exp(-i SWAP dt) exactly, with
    no amplitude leaking out of the |00> block.
    """
    w = lcu_module(n, dt)
    d2 = 4**n
    proj = np.zeros((4 * d2, 4 * d2), dtype=complex)
    proj[:d2, :d2] = np.eye(d2)
    refl = np.eye(4 * d2, dtype=complex) - 2 * proj
    return -w @ refl @ w.conj().T @ refl @ w


def _c_ry_gates(control: int, target: int, theta: float) -> list:
    return [
        Gate("RY", (target,), theta / 2),
        Gate("CNOT", (control, target)),
        Gate("RY", (target,), -theta / 2),
        Gate("CNOT", (control, target)),
    ]


def _anti_c_ry_gates(control: int, target: int, theta: float) -> list:
    return [
        Gate("X", (control,)),
        Gate("RY", (target,), theta),
        Gate("CNOT", (control, target)),
        Gate("RY", (target,), -theta / 2),
        Gate("CNOT", (control, target)),
        Gate("RY", (target,), -theta / 2),
        Gate("X", (control,)),
    ]


def _c_phase_gates(control: int, target: int) -> list:
    # exact controlled-S from T, RZ and CNOT
    return [
        Gate("T", (control,)),
        Gate("RZ", (target,), np.pi / 2),
        Gate("CNOT", (control, target)),
        Gate("RZ", (target,), -np.pi / 4),
        Gate("CNOT", (control, target)),
        Gate("RZ", (target,), -np.pi / 4),
    ]


def _toffoli_gates(a: int, b: int, target: int) -> list:
    """Doubly-controlled X from six CNOTs plus single-qubit phases.

    T-dagger is written as RZ(-pi/4), which shifts the whole block by a
    fixed global phase only.
    """
    return [
        Gate("H", (target,)),
        Gate("CNOT", (b, target)),
        Gate("RZ", (target,), -np.pi / 4),
        Gate("CNOT", (a, target)),
        Gate("T", (target,)),
        Gate("CNOT", (b, target)),
        Gate("RZ", (target,), -np.pi / 4),
        Gate("CNOT", (a, target)),
        Gate("T", (b,)),
        Gate("T", (target,)),
        Gate("H", (target,)),
        Gate("CNOT", (a, b)),
        Gate("T", (a,)),
        Gate("RZ", (b,), -np.pi / 4),
        Gate("CNOT", (a, b)),
    ]


def _ccz_gates(a: int, b: int, target: int) -> list:
    return [Gate("H", (target,))] + _toffoli_gates(a, b, target) + [Gate("H", (target,))]


def _dagger(gates: list) -> list:
    """Reverse and invert a primitive gate sequence (up to global phase)."""
    out = []
    for g in reversed(gates):
        if g.kind in ("H", "X", "Z", "CNOT", "CZ", "TOFFOLI"):
            out.append(g)
        elif g.kind in ("RY", "RZ", "CRY"):
            out.append(Gate(g.kind, g.qubits, -g.theta))
        elif g.kind == "T":
            out.append(Gate("RZ", g.qubits, -np.pi / 4))
        elif g.kind == "S":
            out.append(Gate("RZ", g.qubits, -np.pi / 2))
        elif g.kind == "CS":
            out.append(Gate("CZ", g.qubits))
            out.append(Gate("CS", g.qubits))
        else:
            raise ValueError(f"cannot invert gate kind {g.kind!r}")
    return out


def _c_select_gates(layout: RegisterLayout, dt: float) -> list:
    """Measure-controlled selected swap with the (-i sgn) branch phase.

    The AND of the measure qubit and the second ancilla is computed into
    the work qubit, which then drives one controlled swap per register
    pair; the work qubit is uncomputed afterwards. The trailing phase
    gates realize -i for positive dt and +i for negative dt on the
    selected branch.
    """
    m, w, a2 = layout.measure, layout.work, layout.anc2
    gates = _toffoli_gates(m, a2, w)
    for main_q, copy_q in zip(layout.main, layout.copy):
        gates.append(Gate("CNOT", (copy_q, main_q)))
        gates += _toffoli_gates(w, main_q, copy_q)
        gates.append(Gate("CNOT", (copy_q, main_q)))
    gates += _toffoli_gates(m, a2, w)
    gates += _c_phase_gates(m, a2)
    if dt > 0:
        gates.append(Gate("CZ", (m, a2)))
    return gates


def controlled_amplification_gates(n: int, dt: float) -> GateList:
    """Primitive-gate realization of the measure-controlled amplified block.

    Assembled on the :class:`RegisterLayout` register file, the sequence
    equals the controlled ``amplification_operator`` up to a global phase
    on every input whose work qubit is |0> and whose first ancilla is |0>
    unless the measure qubit is |1> (the anti-controlled rotation and its
    closing inverse are left uncontrolled, exactly as cheap hardware
    realizations do, so the measure-off branch cancels only from a1 = |0>).
    Both qubits are returned to |0>. One reflection carries the overall
    minus sign of the amplification product, so no uncontrolled phase
    correction is needed.
    """
    theta1, theta2 = _rotation_angles(dt)
    lay = RegisterLayout(n)
    m, a1, a2 = lay.measure, lay.anc1, lay.anc2

    c_w = (
        _c_ry_gates(m, a1, theta1)
        + _anti_c_ry_gates(a1, a2, theta2)
        + _c_select_gates(lay, dt)
        + [Gate("RY", (a2,), -theta2)]
    )
    reflect_first = (
        [Gate("X", (a1,)), Gate("CZ", (m, a1))] + _ccz_gates(m, a1, a2) + [Gate("X", (a1,))]
    )
    reflect_second = (
        [Gate("CZ", (m, a1)), Gate("X", (a1,))] + _ccz_gates(m, a1, a2) + [Gate("X", (a1,))]
    )
    gates = c_w + reflect_first + _dagger(c_w) + reflect_second + c_w
    return GateList(gates=tuple(gates), qubit_count=lay.total)


@dataclass(frozen=True)
class ResourceTally:
    """Copies of the input state, primitive gates, and shots consumed."""

    copies_used: int = 0
    primitive_gates: int = 0
    shots: int = 0

    def __add__(self, other: "ResourceTally") -> "ResourceTally":
        return ResourceTally(
            copies_used=self.copies_used + other.copies_used,
            primitive_gates=self.primitive_gates + other.primitive_gates,
            shots=self.shots + other.shots,
        )


def _segment_channel_matrix(rho: DensityMatrix, dt: float, level: str) -> np.ndarray:
    """Linear map on the (measure, main) state for one time slice.

    The slice appends a fresh copy, applies the controlled interaction at
    the requested fidelity level, and traces the copy (and, at gate level,
    the ancillas) back out. Returned as a d^2 x d^2 matrix acting on
    row-major vectorized density matrices.
    """
    n = rho.n_qubits
    d = 2 * rho.dim
    if level == "matrix":
        cu = _controlled(swap_exp_exact(n, dt))
        nq_ext = 1 + 2 * n
        keep = [0] + list(range(1, 1 + n))

        def push(basis):
            ext = np.kron(basis, rho.entries)
            return partial_trace(cu @ ext @ cu.conj().T, keep, nq_ext)

    elif level == "gate":
        gl = controlled_amplification_gates(n, dt)
        seg_u = assemble_unitary(gl)
        lay = RegisterLayout(n)
        nq_ext = lay.total
        zeros3 = np.zeros((8, 8), dtype=complex)
        zeros3[0, 0] = 1.0
        # kron order (measure, main, work, anc1, anc2, copy) -> layout order
        cur = [lay.measure] + list(lay.main) + [lay.work, lay.anc1, lay.anc2] + list(lay.copy)
        source = [cur.index(j) for j in range(nq_ext)]
        keep = [lay.measure] + list(lay.main)

        def push(basis):
            ext = np.kron(np.kron(basis, zeros3), rho.entries)
            ext = permute_qubits(ext, source)
            return partial_trace(seg_u @ ext @ seg_u.conj().T, keep, nq_ext)

    else:
        raise ValueError(f"level must be 'matrix' or 'gate', got {level!r}")

    channel = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            basis = np.zeros((d, d), dtype=complex)
            basis[i, j] = 1.0
            channel[:, i * d + j] = push(basis).reshape(-1)
    return channel


def hadamard_test_expectation(
    rho: DensityMatrix,
    t: float,
    n_segments: int,
    level: str = "matrix",
    tol: Tolerances = DEFAULT_TOL,
):
    """Exact measure-qubit expectation of the segmented interference circuit.

    Splits t into n_segments slices of dt = t / n_segments; each slice
    consumes one fresh copy of the state and is traced out again (qubit
    reset), so n_segments + 1 copies are used in total. Returns
    (Pr[0] - Pr[1], tally). Shot noise is layered separately via
    :func:`sample_shots`.
    """
    if n_segments < 1:
        raise ValueError(f"n_segments must be >= 1, got {n_segments}")
    dt = t / n_segments
    gates_per_segment = 0
    if level == "gate":
        gates_per_segment = len(controlled_amplification_gates(rho.n_qubits, dt))
    d = 2 * rho.dim
    plus = np.full((2, 2), 0.5, dtype=complex)
    sigma = np.kron(plus, rho.entries)
    if dt != 0.0:
        channel = _segment_channel_matrix(rho, dt, level)
        propagated = np.linalg.matrix_power(channel, n_segments) @ sigma.reshape(-1)
        sigma = propagated.reshape(d, d)
    h_full = np.kron(_H, np.eye(rho.dim, dtype=complex))
    sigma = h_full @ sigma @ h_full.conj().T
    dm = rho.dim
    pr0 = float(np.real(np.trace(sigma[:dm, :dm])))
    pr1 = float(np.real(np.trace(sigma[dm:, dm:])))
    tally = ResourceTally(
        copies_used=n_segments + 1,
        primitive_gates=n_segments * gates_per_segment,
        shots=0,
    )
    return pr0 - pr1, tally


def sample_shots(expectation: float, shots: int, seed) -> float:
    """Empirical mean of `shots` +/-1 measurements with the given mean.

    The +1 count is drawn as a single binomial variate, which is the same
    distribution as summing individual draws. Deterministic per seed.
    """
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    if abs(expectation) > 1 + 1e-9:
        raise ValueError(f"expectation {expectation} outside [-1, 1]")
    p_plus = min(max((1.0 + expectation) / 2.0, 0.0), 1.0)
    rng = np.random.default_rng(seed)
    ones = rng.binomial(shots, p_plus)
    return 2.0 * ones / shots - 1.0


def estimate_purity_swap_test(rho: DensityMatrix, shots: int | None, seed=0) -> float:
    """tr(rho^2) read off the controlled-swap interference circuit.

    The exact circuit expectation equals the purity; when `shots` is given
    the returned value carries the corresponding finite-sample noise.
    """
    c_swap = _controlled(swap_matrix(rho.n_qubits))
    plus = np.full((2, 2), 0.5, dtype=complex)
    joint = np.kron(plus, np.kron(rho.entries, rho.entries))
    joint = c_swap @ joint @ c_swap.conj().T
    d2 = rho.dim**2
    h_full = np.kron(_H, np.eye(d2, dtype=complex))
    joint = h_full @ joint @ h_full.conj().T
    expectation = float(np.real(np.trace(joint[:d2, :d2]) - np.trace(joint[d2:, d2:])))
    if shots is None:
        return expectation
    return sample_shots(expectation, shots, seed)

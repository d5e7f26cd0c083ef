"""Dense density-matrix numerics: validation, exact spectral quantities,
noise channels, and reproducible random-state generation.

Everything downstream (series evaluation, circuit simulation, estimators)
is checked against the exact spectral functions defined here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .exceptions import (
    AlphaOutOfRange,
    BadDimension,
    DimMismatch,
    InfeasibleFloor,
    NotHermitian,
    NotPSD,
    TraceNotOne,
)


@dataclass(frozen=True)
class Tolerances:
    """Named numerical tolerances, collected in one overridable record."""

    hermiticity: float = 1e-10
    trace: float = 1e-10
    eigenvalue_negativity: float = 1e-10
    kraus_completeness: float = 1e-10
    spectrum_reconstruction: float = 1e-9
    spectrum_trace: float = 1e-9
    unitarity: float = 1e-9
    # eigenvalues below this cutoff are treated as exact zeros in entropies
    eigenvalue_cutoff: float = 1e-12
    weight_consistency: float = 1e-12


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True)
class DensityMatrix:
    """Validated quantum state: Hermitian, PSD, unit-trace, dim = 2^n.

    Construct through :func:`validate_state`; the entries array is frozen
    so instances can be shared across threads.
    """

    entries: np.ndarray
    dim: int

    @property
    def n_qubits(self) -> int:
        return self.dim.bit_length() - 1

    def __post_init__(self):
        self.entries.setflags(write=False)


@dataclass(frozen=True)
class Spectrum:
    """Eigendecomposition with eigenvalues sorted in descending order."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # column j pairs with eigenvalues[j]


@dataclass(frozen=True)
class KrausChannel:
    """Trace-preserving channel given by its Kraus operators."""

    kraus_ops: tuple
    dim: int


def _as_complex_matrix(raw) -> np.ndarray:
    mat = np.asarray(raw, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise BadDimension(f"expected a square matrix, got shape {mat.shape}")
    d = mat.shape[0]
    if d < 2 or (d & (d - 1)) != 0:
        raise BadDimension(f"dimension {d} is not a power of two >= 2")
    return mat


def validate_state(raw, tol: Tolerances = DEFAULT_TOL) -> DensityMatrix:
    """Check Hermiticity, unit trace, and positivity; return the typed state.

    Raises BadDimension / NotHermitian / TraceNotOne / NotPSD with the
    measured violation in the message.
    """
    mat = _as_complex_matrix(raw)
    herm_gap = np.abs(mat - mat.conj().T).max()
    if herm_gap > tol.hermiticity:
        raise NotHermitian(f"max |M - M^dag| = {herm_gap:.3e} exceeds {tol.hermiticity:.1e}")
    trace_gap = abs(mat.trace() - 1.0)
    if trace_gap > tol.trace:
        raise TraceNotOne(f"|tr(M) - 1| = {trace_gap:.3e} exceeds {tol.trace:.1e}")
    eigmin = float(np.linalg.eigvalsh(mat).min())
    if eigmin < -tol.eigenvalue_negativity:
        raise NotPSD(f"minimum eigenvalue {eigmin:.3e} below -{tol.eigenvalue_negativity:.1e}")
    return DensityMatrix(entries=mat, dim=mat.shape[0])


def spectrum(rho: DensityMatrix) -> Spectrum:
    """Eigendecomposition of the state, eigenvalues descending."""
    vals, vecs = np.linalg.eigh(rho.entries)
    order = np.argsort(vals)[::-1]
    return Spectrum(eigenvalues=vals[order], eigenvectors=vecs[:, order])


def von_neumann_exact(rho: DensityMatrix, tol: Tolerances = DEFAULT_TOL) -> float:
    """-sum_j lam_j ln(lam_j) in nats; eigenvalues under the cutoff contribute 0."""
    lam = spectrum(rho).eigenvalues
    lam = lam[lam > tol.eigenvalue_cutoff]
    return float(-np.sum(lam * np.log(lam)))


def renyi_exact(
    rho: DensityMatrix,
    alpha: float,
    log_base: float = np.e,
    tol: Tolerances = DEFAULT_TOL,
) -> float:
    """Order-alpha entropy (1/(1-alpha)) * log_base(sum_j lam_j^alpha)."""
    if alpha <= 0 or alpha == 1:
        raise AlphaOutOfRange(f"alpha must be in (0,1) or (1,inf), got {alpha}")
    if log_base <= 1:
        raise ValueError(f"log base must exceed 1, got {log_base}")
    lam = spectrum(rho).eigenvalues
    lam = lam[lam > tol.eigenvalue_cutoff]
    power_trace = float(np.sum(lam**alpha))
    return float(np.log(power_trace) / np.log(log_base) / (1.0 - alpha))


def trace_cos_exact(rho: DensityMatrix, t: float) -> float:
    """sum_j lam_j cos(lam_j t): the exact value every circuit estimate targets."""
    lam = spectrum(rho).eigenvalues
    return float(np.sum(lam * np.cos(lam * t)))


def purity_exact(rho: DensityMatrix) -> float:
    """tr(rho^2)."""
    return float(np.real(np.trace(rho.entries @ rho.entries)))


_PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
_PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def make_channel(kraus_ops, tol: Tolerances = DEFAULT_TOL) -> KrausChannel:
    """Validate completeness sum_i K_i^dag K_i = I and wrap the operators."""
    ops = tuple(np.asarray(k, dtype=complex) for k in kraus_ops)
    d = ops[0].shape[0]
    total = sum(k.conj().T @ k for k in ops)
    gap = np.abs(total - np.eye(d)).max()
    if gap > tol.kraus_completeness:
        raise ValueError(f"channel not trace preserving: |sum K^dag K - I| = {gap:.3e}")
    return KrausChannel(kraus_ops=ops, dim=d)


def amplitude_damping_channel(p: float) -> KrausChannel:
    """Single-qubit amplitude damping at level p in [0,1]."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"noise level must be in [0,1], got {p}")
    d0 = np.array([[1, 0], [0, np.sqrt(1 - p)]], dtype=complex)
    d1 = np.array([[0, np.sqrt(p)], [0, 0]], dtype=complex)
    return make_channel([d0, d1])


def depolarizing_channel(p: float) -> KrausChannel:
    """Single-qubit depolarizing: (1-p) rho + (p/3)(X rho X + Y rho Y + Z rho Z)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"noise level must be in [0,1], got {p}")
    ops = [
        np.sqrt(1 - p) * np.eye(2, dtype=complex),
        np.sqrt(p / 3) * _PAULI_X,
        np.sqrt(p / 3) * _PAULI_Y,
        np.sqrt(p / 3) * _PAULI_Z,
    ]
    return make_channel(ops)


def apply_channel(
    rho: DensityMatrix, channel: KrausChannel, tol: Tolerances = DEFAULT_TOL
) -> DensityMatrix:
    """sum_i K_i rho K_i^dag, revalidated as a state."""
    if channel.dim != rho.dim:
        raise DimMismatch(f"channel dim {channel.dim} != state dim {rho.dim}")
    out = np.zeros_like(rho.entries)
    for k in channel.kraus_ops:
        out = out + k @ rho.entries @ k.conj().T
    return validate_state(out, tol)


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Ginibre matrix."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(g)
    phases = np.diag(r).copy()
    phases /= np.abs(phases)
    return q * phases


_MAX_REJECTIONS = 10_000


def random_state_with_floor(
    n_qubits: int, lambda_floor: float, seed: int, tol: Tolerances = DEFAULT_TOL
) -> DensityMatrix:
    """Random full-rank n-qubit state whose minimum eigenvalue is >= lambda_floor.

    The spectrum is drawn uniformly from the probability simplex conditioned
    on the floor (rejection sampling on a flat Dirichlet; after 10^4
    rejections the draw is shifted and rescaled onto the floor instead), then
    conjugated by a Haar-random unitary. Deterministic for a given seed.
    """
    dim = 2**n_qubits
    if lambda_floor * dim > 1.0 + 1e-15:
        raise InfeasibleFloor(
            f"floor {lambda_floor} infeasible: {dim} eigenvalues summing to 1 "
            f"need floor <= {1.0 / dim:.6f}"
        )
    rng = np.random.default_rng(seed)
    lam = None
    for _ in range(_MAX_REJECTIONS):
        cand = rng.dirichlet(np.ones(dim))
        if cand.min() >= lambda_floor:
            lam = cand
            break
    if lam is None:
        # squeeze a fresh flat-Dirichlet draw into the feasible region
        cand = rng.dirichlet(np.ones(dim))
        lam = lambda_floor + (1.0 - dim * lambda_floor) * cand
    u = haar_unitary(dim, rng)
    mat = (u * lam) @ u.conj().T
    mat = (mat + mat.conj().T) / 2
    mat /= mat.trace().real
    return validate_state(mat, tol)


def state_from_parts(re_part, im_part, tol: Tolerances = DEFAULT_TOL) -> DensityMatrix:
    """Assemble and validate a state from separate real/imaginary matrices."""
    re_arr = np.asarray(re_part, dtype=float)
    im_arr = np.asarray(im_part, dtype=float)
    if re_arr.shape != im_arr.shape:
        raise BadDimension(f"re/im shapes differ: {re_arr.shape} vs {im_arr.shape}")
    return validate_state(re_arr + 1j * im_arr, tol)


def load_state(path, tol: Tolerances = DEFAULT_TOL) -> DensityMatrix:
    """Load a state from a JSON file {"re": [[...]], "im": [[...]]} (row-major).

    "im" may be omitted for real matrices.
    """
    with open(path) as fh:
        payload = json.load(fh)
    if not isinstance(payload, dict) or "re" not in payload:
        raise BadDimension("state file must be a JSON object with an 're' matrix")
    re_part = payload["re"]
    im_part = payload.get("im")
    if im_part is None:
        im_part = np.zeros_like(np.asarray(re_part, dtype=float))
    return state_from_parts(re_part, im_part, tol)


def save_state(rho: DensityMatrix, path) -> None:
    """Write a state in the same JSON layout that load_state reads."""
    payload = {
        "re": np.real(rho.entries).tolist(),
        "im": np.imag(rho.entries).tolist(),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)

"""Full N-party correlation tensors and their local-frame geometry.

Index values 0, 1, 2 stand for the Pauli operators x, y, z.  A local frame is
a 3x3 real matrix whose rows are the new basis directions; rotating a tensor
by frames ``R_1..R_N`` gives ``T'_{i1..iN} = sum R_1[i1,a1] ... R_N[iN,aN] T_{a1..aN}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ArityError, ValidationError
from .qstate import QuantumState

PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)
AXES = "xyz"

ENTRY_TOL = 1e-9
IMAG_TOL = 1e-12
FRAME_TOL = 1e-10
UNIT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class CorrelationTensor:
    """Real array of shape ``(3,) * n_parties``; entry ``[i1, ..., iN]`` is
    Tr(rho sigma_i1 x ... x sigma_iN)."""

    entries: np.ndarray

    def __post_init__(self):
        t = np.array(self.entries, dtype=float)
        if t.ndim < 1 or t.shape != (3,) * t.ndim:
            raise ValidationError(f"correlation tensor must have shape (3,)*N, got {t.shape}")
        if not np.all(np.isfinite(t)):
            raise ValidationError("correlation tensor has non-finite entries")
        if np.max(np.abs(t)) > 1 + ENTRY_TOL:
            raise ValidationError("correlation tensor entry exceeds 1 in modulus")
        t.setflags(write=False)
        object.__setattr__(self, "entries", t)

    @property
    def n_parties(self) -> int:
        return self.entries.ndim

    def __getitem__(self, key):
        """Accepts integer index tuples or axis labels such as ``"xxz"``."""
        if isinstance(key, str):
            key = tuple(AXES.index(c) for c in key.lower())
        return float(self.entries[key])

    def scaled(self, v: float) -> "CorrelationTensor":
        return CorrelationTensor(v * self.entries)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.entries))

    def to_json(self) -> str:
        return json.dumps({"n_parties": self.n_parties,
                           "entries": self.entries.ravel().tolist()})

    @classmethod
    def from_json(cls, text: str) -> "CorrelationTensor":
        data = json.loads(text)
        n = int(data["n_parties"])
        flat = np.asarray(data["entries"], dtype=float)
        if flat.size != 3**n:
            raise ValidationError(f"expected {3**n} entries for {n} parties, got {flat.size}")
        return cls(flat.reshape((3,) * n))


def as_array(t) -> np.ndarray:
    return t.entries if isinstance(t, CorrelationTensor) else np.asarray(t, dtype=float)


def compute_tensor(state: QuantumState) -> CorrelationTensor:
    """T_{i1..iN} = Tr(rho . sigma_i1 x ... x sigma_iN)."""
    if not isinstance(state, QuantumState):
        raise ValidationError("compute_tensor expects a QuantumState")
    n = state.n_qubits
    # axes: [pauli indices done so far] + [remaining row axes] + [remaining col axes]
    x = state.rho.reshape((2,) * (2 * n))
    for k in range(n):
        remaining = n - k
        # Tr(rho sigma) = sum_ij rho_ij sigma_ji
        x = np.tensordot(x, PAULI, axes=([k, k + remaining], [2, 1]))
        x = np.moveaxis(x, -1, k)
    if np.max(np.abs(x.imag)) > IMAG_TOL:
        raise ValidationError("correlation tensor has a non-negligible imaginary part")
    return CorrelationTensor(x.real.copy())


def check_frame(frame) -> np.ndarray:
    r = np.asarray(frame, dtype=float)
    if r.shape != (3, 3) or np.max(np.abs(r @ r.T - np.eye(3))) > FRAME_TOL:
        raise ValidationError("local frame must be a 3x3 matrix with orthonormal rows")
    return r


def random_frames(n: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Haar-random proper rotations, one per party."""
    frames = []
    for _ in range(n):
        q, r = np.linalg.qr(rng.normal(size=(3, 3)))
        q = q * np.sign(np.diag(r))
        if np.linalg.det(q) < 0:
            q[:, 0] = -q[:, 0]
        frames.append(q)
    return frames


def multilinear(t: np.ndarray, mats) -> np.ndarray:
    """Apply ``mats[j]`` (shape (m_j, 3), or None to skip) along mode j."""
    out = t
    for j, m in enumerate(mats):
        if m is None:
            continue
        out = np.moveaxis(np.tensordot(m, out, axes=([1], [j])), 0, j)
    return out


def rotate(t, frames) -> CorrelationTensor:
    arr = as_array(t)
    if len(frames) != arr.ndim:
        raise ArityError(f"need {arr.ndim} frames, got {len(frames)}")
    mats = [check_frame(f) for f in frames]
    return CorrelationTensor(multilinear(arr, mats))


def _check_unit(vec) -> np.ndarray:
    v = np.asarray(vec, dtype=float)
    if v.shape != (3,) or abs(np.linalg.norm(v) - 1) > UNIT_TOL:
        raise ValidationError(f"direction {vec!r} is not a unit 3-vector")
    return v


def contract(t, dirs) -> float:
    """Quantum correlation function for measurement directions ``dirs``."""
    arr = as_array(t)
    if len(dirs) != arr.ndim:
        raise ArityError(f"need {arr.ndim} directions, got {len(dirs)}")
    out = arr
    for d in reversed([_check_unit(d) for d in dirs]):
        out = out @ d
    return float(out)


@dataclass(frozen=True, eq=False)
class SchmidtSlices:
    """T = sum_i slices[i] (x) gammas[i] along ``party``; norms decreasing."""

    party: int
    gammas: np.ndarray  # (3, 3), rows are the unit vectors gamma_i
    slices: np.ndarray  # (3, 3, ..., 3): slices[i] is the rank-(N-1) tensor P_i
    norms: np.ndarray

    def reconstruct(self) -> np.ndarray:
        t = np.tensordot(self.slices, self.gammas, axes=([0], [0]))
        return np.moveaxis(t, -1, self.party)


def schmidt_split(t, party: int) -> SchmidtSlices:
    """Orthogonal slice decomposition along one party via SVD of the
    3^(N-1) x 3 unfolding."""
    arr = as_array(t)
    n = arr.ndim
    if n < 2:
        raise ArityError("Schmidt split needs at least 2 parties")
    if not -n <= party < n:
        raise ArityError(f"party index {party} out of range for {n} parties")
    party %= n
    moved = np.moveaxis(arr, party, -1)
    rest_shape = moved.shape[:-1]
    u, s, vt = np.linalg.svd(moved.reshape(-1, 3), full_matrices=False)
    for i in range(3):
        if vt[i, np.argmax(np.abs(vt[i]))] < 0:
            vt[i] = -vt[i]
            u[:, i] = -u[:, i]
    slices = np.stack([(s[i] * u[:, i]).reshape(rest_shape) for i in range(3)])
    return SchmidtSlices(party=party, gammas=vt, slices=slices, norms=s)


def top2_plane_norm(p) -> float:
    """Sum of the two largest squared singular values of a 3x3 slice, i.e. the
    largest squared norm of its restriction to a pair of 2D planes."""
    p = np.asarray(p, dtype=float)
    if p.shape != (3, 3):
        raise ValidationError(f"expected a 3x3 slice, got shape {p.shape}")
    s = np.linalg.svd(p, compute_uv=False)
    return float(s[0] ** 2 + s[1] ** 2)

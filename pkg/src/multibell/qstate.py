"""N-qubit states: constructors, white-noise admixture and a small text grammar.

Basis ordering is big-endian: qubit 0 is the leftmost tensor factor, so the
computational basis state |b0 b1 ... b_{N-1}> sits at index int("b0b1...", 2).
|0> is the +1 eigenvector of sigma_z.

State specification grammar (used by the CLI)::

    spec    := kind [":" params]
    params  := param ("," param)*
    param   := key "=" value
    kind    := "ghz" | "w" | "fourphoton" | "product" | "random" | "noise"

    ghz:n=3,alpha=0.2618      cos(alpha)|0..0> + sin(alpha)|1..1>
    w:n=4                     symmetric one-excitation state
    fourphoton                the 4-qubit state with T_xxxx = T_yyyy = T_zzzz = 1
    product:n=3               |0..0>
    random:n=3,seed=7[,rank=2]  seeded random density matrix (rank 1 = pure)
    noise:v=0.8,inner=<spec>  v*rho + (1-v)*1/2^N; ``inner`` must come last and
                              consumes the rest of the string
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ArityError, DomainError, SpecParseError, ValidationError

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Density matrix of ``n_qubits`` qubits, validated on construction."""

    n_qubits: int
    rho: np.ndarray

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ArityError(f"n_qubits must be positive, got {self.n_qubits}")
        rho = np.array(self.rho, dtype=complex)
        dim = 2**self.n_qubits
        if rho.shape != (dim, dim):
            raise ValidationError(f"rho must be {dim}x{dim}, got {rho.shape}")
        if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOL:
            raise ValidationError("rho is not Hermitian")
        if abs(np.trace(rho) - 1) > TRACE_TOL:
            raise ValidationError(f"trace of rho is {np.trace(rho)}, expected 1")
        if np.linalg.eigvalsh(rho)[0] < -PSD_TOL:
            raise ValidationError("rho is not positive semidefinite")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @classmethod
    def from_vector(cls, psi) -> "QuantumState":
        psi = np.asarray(psi, dtype=complex)
        n = int(round(math.log2(psi.size)))
        if 2**n != psi.size:
            raise ValidationError(f"state vector length {psi.size} is not a power of two")
        psi = psi / np.linalg.norm(psi)
        rho = np.outer(psi, psi.conj())
        # symmetrise away rounding so the Hermiticity check is exact
        return cls(n, (rho + rho.conj().T) / 2)

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.rho @ self.rho)))

    def reduced(self, keep) -> np.ndarray:
        """Partial trace onto the qubits listed in ``keep`` (in ascending order)."""
        keep = sorted(keep)
        n = self.n_qubits
        t = self.rho.reshape((2,) * (2 * n))
        drop = [q for q in range(n) if q not in keep]
        for q in reversed(drop):
            t = np.trace(t, axis1=q, axis2=q + t.ndim // 2)
        d = 2 ** len(keep)
        return t.reshape(d, d)


def _basis_index(bits: str) -> int:
    return int(bits, 2)


def make_ghz(n: int, alpha: float) -> QuantumState:
    """cos(alpha)|0...0> + sin(alpha)|1...1>."""
    if n < 2:
        raise ArityError(f"GHZ state needs n >= 2, got {n}")
    if not math.isfinite(alpha):
        raise DomainError(f"alpha must be finite, got {alpha}")
    psi = np.zeros(2**n)
    psi[0] = math.cos(alpha)
    psi[-1] = math.sin(alpha)
    return QuantumState.from_vector(psi)


def make_product(n: int) -> QuantumState:
    """|0...0>."""
    if n < 1:
        raise ArityError(f"n must be positive, got {n}")
    psi = np.zeros(2**n)
    psi[0] = 1.0
    return QuantumState.from_vector(psi)


def make_w(n: int) -> QuantumState:
    """Equal-amplitude superposition of all single-excitation basis states."""
    if n < 3:
        raise ArityError(f"W state needs n >= 3, got {n}")
    psi = np.zeros(2**n)
    for q in range(n):
        psi[1 << (n - 1 - q)] = 1.0
    return QuantumState.from_vector(psi)


def make_four_photon() -> QuantumState:
    psi = np.zeros(16)
    for bits, amp in [("0000", 1.0), ("1111", 1.0), ("1010", 0.5),
                      ("0101", 0.5), ("0110", 0.5), ("1001", 0.5)]:
        psi[_basis_index(bits)] = amp
    # the overall sqrt(1/3) already normalises the listed amplitudes
    psi *= math.sqrt(1 / 3)
    return QuantumState.from_vector(psi)


def random_state(n: int, seed: int = 0, rank: int = 1) -> QuantumState:
    """Seeded random state: Haar-random pure state for ``rank=1``, otherwise a
    normalised Wishart-type mixture of ``rank`` random pure states."""
    if n < 1:
        raise ArityError(f"n must be positive, got {n}")
    dim = 2**n
    if not 1 <= rank <= dim:
        raise DomainError(f"rank must lie in [1, {dim}], got {rank}")
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    if rank == 1:
        return QuantumState.from_vector(g[:, 0])
    rho = g @ g.conj().T
    rho /= np.trace(rho)
    return QuantumState(n, (rho + rho.conj().T) / 2)


def mix_white_noise(state: QuantumState, v: float) -> QuantumState:
    """v * rho + (1 - v) * 1/2^N."""
    if not 0.0 <= v <= 1.0:
        raise DomainError(f"visibility must lie in [0, 1], got {v}")
    dim = 2**state.n_qubits
    rho = v * state.rho + (1 - v) * np.eye(dim) / dim
    return QuantumState(state.n_qubits, rho)


# --- text grammar ---------------------------------------------------------

def _parse_params(text: str, kind: str) -> dict[str, str]:
    params: dict[str, str] = {}
    rest = text
    while rest:
        if kind == "noise" and rest.startswith("inner="):
            params["inner"] = rest[len("inner="):]
            break
        item, _, rest = rest.partition(",")
        key, eq, value = item.partition("=")
        if not eq or not key or not value:
            raise SpecParseError(f"malformed parameter {item!r} in {kind!r} spec")
        if key in params:
            raise SpecParseError(f"duplicate parameter {key!r}")
        params[key.strip()] = value.strip()
    return params


def _take(params: dict[str, str], key: str, conv, kind: str):
    if key not in params:
        raise SpecParseError(f"{kind!r} spec requires parameter {key!r}")
    raw = params.pop(key)
    try:
        return conv(raw)
    except ValueError as exc:
        raise SpecParseError(f"bad value {raw!r} for {key!r}") from exc


def _integer(raw: str) -> int:
    value = float(raw)
    if not value.is_integer():
        raise ValueError(raw)
    return int(value)


def parse_state_spec(spec: str) -> QuantumState:
    """Build a state from the grammar in the module docstring.

    Raises SpecParseError on syntax problems; arity/domain problems raise the
    constructors' own errors.
    """
    spec = spec.strip()
    kind, _, tail = spec.partition(":")
    kind = kind.strip().lower()
    params = _parse_params(tail, kind)
    if kind == "ghz":
        n = _take(params, "n", _integer, kind)
        alpha = _take(params, "alpha", float, kind)
        state = make_ghz(n, alpha)
    elif kind == "w":
        state = make_w(_take(params, "n", _integer, kind))
    elif kind == "fourphoton":
        state = make_four_photon()
    elif kind == "product":
        state = make_product(_take(params, "n", _integer, kind))
    elif kind == "random":
        n = _take(params, "n", _integer, kind)
        seed = _take(params, "seed", _integer, kind) if "seed" in params else 0
        rank = _take(params, "rank", _integer, kind) if "rank" in params else 1
        state = random_state(n, seed, rank)
    elif kind == "noise":
        v = _take(params, "v", float, kind)
        inner = params.pop("inner", None)
        if not inner:
            raise SpecParseError("noise spec requires a trailing inner=<spec>")
        state = mix_white_noise(parse_state_spec(inner), v)
    else:
        raise SpecParseError(f"unknown state kind {kind!r} in {spec!r}")
    if params:
        raise SpecParseError(f"unexpected parameters {sorted(params)} for {kind!r}")
    return state

"""Multisetting Bell expressions: sign functions, families, evaluation and
direct maximisation over measurement settings.

Every family is stored as a coefficient array ``W`` of shape
``(rows, m_1, ..., m_N)``; the left-hand side for a correlation array ``E``
(indexed by setting numbers) is ``sum_r |<W_r, E>|``.  Setting numbers are
0-based here, so the exponent ``k - 1`` of a 1-based label ``k`` is simply the
array index.

Families
--------
f442      settings (4, 4, 2), classical bound 8
f332      settings (3, 3, 2) ordered (A1, A3, A4 / B1, B3, B4 / C1, C2), bound 8
fN        settings (4, ..., 4, 2), bound 2^N
standard  two settings per party (full set of two-setting correlation
          inequalities in single nonlinear form), bound 2^N
"""

from __future__ import annotations

import itertools
import json
import logging
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize

from . import _linalg
from .corrtensor import UNIT_TOL, as_array, multilinear
from .errors import ArityError, ValidationError

log = logging.getLogger(__name__)

SIGN_ORDER = ((1, 1), (1, -1), (-1, 1), (-1, -1))


@dataclass(frozen=True)
class SignFunction:
    """A map {+1,-1}^2 -> {+1,-1}, stored in the order of ``SIGN_ORDER``."""

    values: tuple[int, int, int, int]

    def __post_init__(self):
        vals = tuple(int(v) for v in self.values)
        if len(vals) != 4 or any(v not in (1, -1) for v in vals):
            raise ValidationError(f"sign function needs four +-1 values, got {self.values!r}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_mapping(cls, mapping) -> "SignFunction":
        return cls(tuple(mapping[k] for k in SIGN_ORDER))

    def __call__(self, s1: int, s2: int) -> int:
        return self.values[SIGN_ORDER.index((s1, s2))]

    def as_dict(self) -> dict:
        return dict(zip(SIGN_ORDER, self.values))

    def is_factorable(self) -> bool:
        """True iff S(s1, s2) = S1(s1) S2(s2); equivalently an even number of -1 values."""
        return int(np.prod(self.values)) == 1

    def factors(self):
        """(S1, S2) as value tuples over (+1, -1), or None if not factorable."""
        if not self.is_factorable():
            return None
        s1 = (self(1, 1), self(-1, 1))
        s2 = (1, self(1, -1) * self(1, 1))
        return s1, s2

    def canonical(self) -> "SignFunction":
        """Representative of {S, -S} with S(+1, +1) = +1."""
        return self if self.values[0] == 1 else SignFunction(tuple(-v for v in self.values))

    def __neg__(self):
        return SignFunction(tuple(-v for v in self.values))


def all_sign_functions() -> list[SignFunction]:
    return [SignFunction(v) for v in itertools.product((1, -1), repeat=4)]


@dataclass(frozen=True)
class InequalitySpec:
    family: str
    n_parties: int
    settings_per_party: tuple[int, ...]
    classical_bound: float

    def __post_init__(self):
        object.__setattr__(self, "settings_per_party", tuple(int(m) for m in self.settings_per_party))
        expected = _family_shape(self.family, self.n_parties)
        if self.settings_per_party != expected[0] or self.classical_bound != expected[1]:
            raise ValidationError(f"inconsistent InequalitySpec for family {self.family!r}")

    @classmethod
    def of(cls, family: str, n: int | None = None) -> "InequalitySpec":
        if n is None:
            n = 3
        shape, bound = _family_shape(family, n)
        return cls(family, n, shape, bound)

    @property
    def total_settings(self) -> int:
        return sum(self.settings_per_party)


def _family_shape(family: str, n: int):
    if family in ("f442", "f332"):
        if n != 3:
            raise ArityError(f"family {family} is tripartite, got n={n}")
        return ((4, 4, 2) if family == "f442" else (3, 3, 2)), 8.0
    if family == "fN":
        if n < 3:
            raise ArityError(f"family fN needs n >= 3, got {n}")
        return (4,) * (n - 1) + (2,), float(2**n)
    if family == "standard":
        if n < 2:
            raise ArityError(f"standard family needs n >= 2, got {n}")
        return (2,) * n, float(2**n)
    raise ValidationError(f"unknown inequality family {family!r}")


# --- coefficient arrays -----------------------------------------------------

def _block(n_free: int, idx: tuple[int, int], signs, c_sign: int,
           shape: tuple[int, ...]) -> np.ndarray:
    """One modulus row: parties 0..n_free-1 use setting numbers ``idx`` with
    weight s_j^index; the last party carries (+-1)^m with ``c_sign``."""
    w = np.zeros(shape)
    for ks in itertools.product(idx, repeat=n_free):
        coef = np.prod([s**k for s, k in zip(signs, ks)])
        for m in range(2):
            w[ks + (m,)] = coef * (c_sign**m)
    return w


@lru_cache(maxsize=None)
def _coefficients_cached(family: str, n: int) -> np.ndarray:
    shape, _ = _family_shape(family, n)
    rows = []
    if family == "f442":
        for s in itertools.product((1, -1), repeat=2):
            rows.append(_block(2, (0, 1), s, 1, shape))
        for s in itertools.product((1, -1), repeat=2):
            rows.append(_block(2, (2, 3), s, -1, shape))
    elif family == "fN":
        for s in itertools.product((1, -1), repeat=n - 1):
            rows.append(_block(n - 1, (0, 1), s, -1, shape))
        for s in itertools.product((1, -1), repeat=n - 1):
            rows.append(_block(n - 1, (2, 3), s, 1, shape))
    elif family == "f332":
        first = np.zeros(shape)
        first[0, 0, :] = 4.0
        rows.append(first)
        # array indices 1, 2 carry the labels 3, 4, whose exponents are 2, 3
        for s1, s2 in itertools.product((1, -1), repeat=2):
            w = np.zeros(shape)
            for k, l, m in itertools.product((1, 2), (1, 2), (0, 1)):
                w[k, l, m] = s1 ** (k + 1) * s2 ** (l + 1) * (-1) ** m
            rows.append(w)
    elif family == "standard":
        for s in itertools.product((1, -1), repeat=n):
            w = np.empty(shape)
            for ks in itertools.product((0, 1), repeat=n):
                w[ks] = np.prod([si**k for si, k in zip(s, ks)])
            rows.append(w)
    out = np.stack(rows)
    out.setflags(write=False)
    return out


def coefficients(spec: InequalitySpec) -> np.ndarray:
    return _coefficients_cached(spec.family, spec.n_parties)


def lhs_from_correlations(w: np.ndarray, e: np.ndarray) -> float:
    """sum_r |<W_r, E>| for one correlation array."""
    return float(np.abs(w.reshape(w.shape[0], -1) @ e.ravel()).sum())


# --- settings ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SettingsAssignment:
    """Per-party arrays of unit measurement directions, shape (m_j, 3)."""

    vectors: tuple = field()

    def __post_init__(self):
        vecs = []
        for v in self.vectors:
            a = np.array(v, dtype=float)
            if a.ndim != 2 or a.shape[1] != 3:
                raise ValidationError(f"settings for a party must have shape (m, 3), got {a.shape}")
            if np.max(np.abs(np.linalg.norm(a, axis=1) - 1)) > UNIT_TOL:
                raise ValidationError("setting directions must be unit vectors")
            a.setflags(write=False)
            vecs.append(a)
        object.__setattr__(self, "vectors", tuple(vecs))

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(v.shape[0] for v in self.vectors)

    def correlations(self, t) -> np.ndarray:
        """E[k1, ..., kN] = T o (n_{1,k1} x ... x n_{N,kN})."""
        arr = as_array(t)
        if len(self.vectors) != arr.ndim:
            raise ArityError(f"{len(self.vectors)} parties of settings for a {arr.ndim}-party tensor")
        return multilinear(arr, self.vectors)

    def rotated(self, frames) -> "SettingsAssignment":
        return SettingsAssignment(tuple(v @ np.asarray(f).T for v, f in zip(self.vectors, frames)))

    def to_json(self) -> str:
        return json.dumps([v.tolist() for v in self.vectors])

    @classmethod
    def from_json(cls, text: str) -> "SettingsAssignment":
        return cls(tuple(np.asarray(v, dtype=float) for v in json.loads(text)))


def _check(t, s: SettingsAssignment, spec: InequalitySpec) -> np.ndarray:
    arr = as_array(t)
    if arr.ndim != spec.n_parties:
        raise ArityError(f"{spec.family} needs {spec.n_parties} parties, tensor has {arr.ndim}")
    if s.shape != spec.settings_per_party:
        raise ArityError(f"{spec.family} needs settings {spec.settings_per_party}, got {s.shape}")
    return s.correlations(arr)


def lhs(t, s: SettingsAssignment, spec: InequalitySpec) -> float:
    return lhs_from_correlations(coefficients(spec), _check(t, s, spec))


def lhs_moduli_442(t, s: SettingsAssignment) -> float:
    return lhs(t, s, InequalitySpec.of("f442"))


def lhs_332(t, s: SettingsAssignment) -> float:
    return lhs(t, s, InequalitySpec.of("f332"))


def lhs_N(t, s: SettingsAssignment) -> float:
    return lhs(t, s, InequalitySpec.of("fN", as_array(t).ndim))


def lhs_standard(t, s: SettingsAssignment) -> float:
    return lhs(t, s, InequalitySpec.of("standard", as_array(t).ndim))


def lhs_linear(t, s: SettingsAssignment, sp: SignFunction, spp: SignFunction) -> float:
    """One member of the linear 4x4x2 family: a single modulus around the
    S'-weighted first block plus the S''-weighted second block."""
    spec = InequalitySpec.of("f442")
    w = coefficients(spec)
    inner = w.reshape(8, -1) @ _check(t, s, spec).ravel()
    return float(abs(np.dot(sp.values, inner[:4]) + np.dot(spp.values, inner[4:])))


# --- direct maximisation ----------------------------------------------------

def seesaw(t: np.ndarray, w: np.ndarray, init: list[np.ndarray], max_iter: int = 3000,
           tol: float = 1e-13):
    """Monotone see-saw ascent of sum_r |<W_r, E(settings)>| for a batch of
    starting points.

    With the signs of the moduli frozen the expression is linear in each
    party's settings, so every setting vector of one party jumps to its
    normalised gradient; re-reading the signs can only increase the value.

    Returns (values (R,), settings list of (R, m_j, 3), iterations used).
    """
    n = t.ndim
    settings = [np.array(s, dtype=float) for s in init]
    wf = w.reshape(w.shape[0], -1)
    values = np.full(settings[0].shape[0], -np.inf)
    it = 0
    for it in range(1, max_iter + 1):
        for j in range(n):
            e = _linalg.multilinear(t, settings)
            lin = e.reshape(e.shape[0], -1) @ wf.T
            sig = np.where(lin >= 0, 1.0, -1.0)
            wsig = (sig @ wf).reshape((-1,) + w.shape[1:])
            z = _linalg.multilinear(t, [s if i != j else None for i, s in enumerate(settings)])
            grad = _linalg.unfold(wsig, j) @ np.swapaxes(_linalg.unfold(z, j), -1, -2)
            nrm = np.linalg.norm(grad, axis=-1, keepdims=True)
            settings[j] = np.where(nrm > 1e-300, grad / np.where(nrm > 0, nrm, 1), settings[j])
        e = _linalg.multilinear(t, settings)
        new = np.abs(e.reshape(e.shape[0], -1) @ wf.T).sum(axis=1)
        done = np.all(new - values < tol)
        values = np.maximum(values, new)
        if done:
            break
    return values, settings, it


def _lhs_and_grad(t: np.ndarray, w: np.ndarray, vectors: list[np.ndarray]):
    """Left-hand side for one set of unit setting vectors and its gradient
    with respect to each vector (signs of the moduli held fixed)."""
    wf = w.reshape(w.shape[0], -1)
    e = multilinear(t, vectors)
    lin = wf @ e.ravel()
    wsig = (np.where(lin >= 0, 1.0, -1.0) @ wf).reshape(w.shape[1:])
    grads = []
    for j in range(t.ndim):
        z = multilinear(t, [v if i != j else None for i, v in enumerate(vectors)])
        zj = np.moveaxis(z, j, 0).reshape(3, -1)
        grads.append(np.moveaxis(wsig, j, 0).reshape(wsig.shape[j], -1) @ zj.T)
    return float(np.abs(lin).sum()), grads


def polish(t, w: np.ndarray, vectors: list[np.ndarray], max_iter: int = 2000):
    """Quasi-Newton refinement of one settings assignment.

    The see-saw converges only sublinearly near flat optima; L-BFGS on the
    unnormalised vectors (normalised inside the objective) finishes the job
    in a few dozen steps.  Returns (value, unit vectors).
    """
    arr = as_array(t)
    shapes = [np.shape(v) for v in vectors]
    cuts = np.cumsum([int(np.prod(sh)) for sh in shapes])[:-1]

    def unpack(x):
        return [part.reshape(sh) for part, sh in zip(np.split(x, cuts), shapes)]

    def negative(x):
        raw = unpack(x)
        norms = [np.linalg.norm(r, axis=-1, keepdims=True) for r in raw]
        units = [r / q for r, q in zip(raw, norms)]
        value, grads = _lhs_and_grad(arr, w, units)
        # chain rule through v / |v|
        flat = [((g - (g * u).sum(-1, keepdims=True) * u) / q).ravel()
                for g, u, q in zip(grads, units, norms)]
        return -value, -np.concatenate(flat)

    x0 = np.concatenate([np.asarray(v, dtype=float).ravel() for v in vectors])
    res = minimize(negative, x0, jac=True, method="L-BFGS-B",
                   options={"maxiter": max_iter, "gtol": 1e-12, "ftol": 1e-16})
    return -float(res.fun), [_unit(v) for v in unpack(res.x)]


def refine(t, w: np.ndarray, init: list[np.ndarray], seesaw_iter: int = 200, polish_top: int = 4):
    """See-saw every start, then polish the best few.

    Returns (values per start, settings list of (R, m_j, 3)).  Values never
    fall below the see-saw result, since a polished start is only accepted
    when it improves.
    """
    arr = as_array(t)
    values, settings, _ = seesaw(arr, w, init, max_iter=seesaw_iter)
    for r in np.argsort(-values, kind="stable")[:polish_top]:
        value, vecs = polish(arr, w, [s[r] for s in settings])
        if value > values[r]:
            values[r] = value
            for s, v in zip(settings, vecs):
                s[r] = v
    return values, settings


@dataclass(frozen=True, eq=False)
class BellMaximum:
    """Best value found and its settings; unpacks as ``value, settings``."""

    value: float
    settings: SettingsAssignment
    spread: float
    restarts_used: int

    def __iter__(self):
        return iter((self.value, self.settings))


def _random_settings(shape, restarts: int, rng: np.random.Generator) -> list[np.ndarray]:
    out = []
    for m in shape:
        v = rng.normal(size=(restarts, m, 3))
        out.append(v / np.linalg.norm(v, axis=-1, keepdims=True))
    return out


def _pair_from_term(t: np.ndarray, planes, vec):
    """Two settings per free party reproducing a term's plane value exactly
    when there are two free parties; plain plane axes otherwise."""
    if len(planes) == 2 and planes[0].shape[0] == 2 and planes[1].shape[0] == 2:
        y = planes[0] @ (t @ vec) @ planes[1].T
        u, r, vt = np.linalg.svd(y)
        v1, v2 = u[:, 0] @ planes[0], u[:, 1] @ planes[0]
        w1, w2 = vt[0] @ planes[1], vt[1] @ planes[1]
        norm = np.hypot(r[0], r[1])
        a = r / norm if norm > 0 else np.array([2**-0.5, 2**-0.5])
        first = np.stack([a[0] * v1 + a[1] * v2, a[0] * v1 - a[1] * v2])
        return [first, np.stack([w1, w2])], norm
    pairs = [np.stack([p[0], p[1]]) for p in planes]
    value = float(np.linalg.norm(multilinear(t, list(planes) + [vec[None]])))
    return pairs, value


def _unit(v):
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def settings_from_criterion(t, spec: InequalitySpec, frames: dict) -> SettingsAssignment:
    """Measurement settings built from a criterion's optimal frames.

    The sums and differences of each pair of settings are placed along the
    optimal local axes, weighted by the singular values of the corresponding
    2x2 block; for the last party the two combinations point along the two
    optimal directions, weighted by the square roots of the two terms.
    """
    arr = as_array(t)
    if spec.family == "standard":
        return SettingsAssignment(tuple(np.asarray(s) for s in frames["settings"]))
    u, w = (np.asarray(d, dtype=float) for d in frames["directions"])
    planes1 = [np.asarray(p, dtype=float) for p in frames["planes"][0]]
    planes2 = [np.asarray(p, dtype=float) for p in frames["planes"][1]]
    if spec.family == "f332":
        a_line, b_line = planes1[0][0], planes1[1][0]
        h1 = abs(float(a_line @ (arr @ u) @ b_line))
        pair2, h2 = _pair_from_term(arr, planes2, w)
        a_set = np.vstack([a_line[None], pair2[0]])
        b_set = np.vstack([b_line[None], pair2[1]])
        free = [a_set, b_set]
    else:
        pair1, h1 = _pair_from_term(arr, planes1, u)
        pair2, h2 = _pair_from_term(arr, planes2, w)
        # f442 pairs the first two settings with C1 + C2; fN with C1 - C2
        first, second = (pair1, pair2) if spec.family == "f442" else (pair2, pair1)
        free = [np.vstack([a, b]) for a, b in zip(first, second)]
    norm = np.hypot(h1, h2)
    cp, cm = (h1 / norm, h2 / norm) if norm > 0 else (2**-0.5, 2**-0.5)
    last = np.stack([cp * u + cm * w, cp * u - cm * w])
    return SettingsAssignment(tuple(_unit(f) for f in free) + (_unit(last),))


def maximize_lhs(t, spec: InequalitySpec, restarts: int = 32, seed: int = 0,
                 warm_start: bool = True, max_iter: int = 200) -> BellMaximum:
    """Largest left-hand side over all measurement settings.

    One start is built from the matching criterion's optimal frames (when
    ``warm_start``); the remaining starts are seeded random unit vectors.
    All starts are refined by ``seesaw`` (``max_iter`` sweeps) and the best
    few are then polished; the best one is returned.
    """
    arr = as_array(t)
    if arr.ndim != spec.n_parties:
        raise ArityError(f"{spec.family} needs {spec.n_parties} parties, tensor has {arr.ndim}")
    rng = np.random.default_rng(seed)
    init = _random_settings(spec.settings_per_party, restarts, rng)
    if warm_start and restarts > 0:
        from .criteria import OptimizerConfig, criterion_for_family

        res = criterion_for_family(spec.family)(arr, OptimizerConfig(restarts=restarts, seed=seed))
        warm = settings_from_criterion(arr, spec, res.argmax_frames)
        for j, v in enumerate(warm.vectors):
            init[j][0] = v
    values, settings = refine(arr, coefficients(spec), init, seesaw_iter=max_iter)
    best = int(np.argmax(values))
    spread = float(values.max() - values.min())
    log.debug("maximize_lhs %s: best %.12g, spread %.3g", spec.family, values[best], spread)
    chosen = SettingsAssignment(tuple(_unit(s[best]) for s in settings))
    return BellMaximum(float(values[best]), chosen, spread, restarts)

"""Violation criteria on correlation tensors, maximised over local frames.

A criterion value C > 1 means the state violates the corresponding Bell
inequality; the violation factor is sqrt(C) and the critical white-noise
visibility is 1/sqrt(C).

Two-term criteria (c442, c332, cN) share one structure: the last party gets
an orthonormal pair (u, w); term one is the squared norm of T contracted with
u and projected onto per-party subspaces, term two the same with w and
independently chosen subspaces.  The subspaces are 2D planes, except for the
first term of c332 where they are single directions.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import _linalg
from .bellineq import InequalitySpec, coefficients, refine
from .corrtensor import CorrelationTensor, as_array, compute_tensor, schmidt_split
from .errors import ArityError, ValidationError
from .qstate import QuantumState

log = logging.getLogger(__name__)

CRITERION_IDS = ("standard", "c442", "c442-numeric", "c332", "cN", "standard-bound")


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 32
    seed: int = 0
    max_iter: int = 500
    tol: float = 1e-12
    # see-saw sweeps before the best starts are polished (standard criterion)
    seesaw_max_iter: int = 200
    # the see-saw landscape has more local optima than the subspace ascent,
    # and each start is cheap, so the standard criterion runs several per restart
    seesaw_starts_per_restart: int = 4

    def __post_init__(self):
        if self.restarts < 1 or self.seesaw_starts_per_restart < 1:
            raise ValidationError("need at least one restart")


@dataclass(frozen=True, eq=False)
class CriterionResult:
    criterion_id: str
    max_value: float
    argmax_frames: dict
    method: str
    restarts_used: int = 1
    spread: float = 0.0
    converged_restarts: int = 1
    history: np.ndarray | None = field(default=None, repr=False)

    @property
    def violation_factor(self) -> float:
        return float(np.sqrt(max(self.max_value, 0.0)))

    @property
    def threshold(self) -> float:
        f = self.violation_factor
        return 1.0 if f <= 1.0 else 1.0 / f

    def to_dict(self) -> dict:
        return {
            "criterion_id": self.criterion_id,
            "max_value": self.max_value,
            "violation_factor": self.violation_factor,
            "threshold": self.threshold,
            "method": self.method,
            "restarts_used": self.restarts_used,
            "spread": self.spread,
            "frames": _jsonable(self.argmax_frames),
        }


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _require(arr: np.ndarray, n: int | None = None, at_least: int | None = None, name=""):
    if n is not None and arr.ndim != n:
        raise ArityError(f"{name} needs exactly {n} parties, got {arr.ndim}")
    if at_least is not None and arr.ndim < at_least:
        raise ArityError(f"{name} needs at least {at_least} parties, got {arr.ndim}")


# --- analytic 4x4x2 ---------------------------------------------------------

def condition_442_analytic(t) -> CriterionResult:
    """Value of the 4x4x2 criterion when the third party's two directions are
    the two leading Schmidt directions and each first/second-party plane is
    spanned by the leading singular vectors of the matching slice.

    This is always attainable, hence a lower bound on the numeric maximum;
    the two coincide for the GHZ-, W- and product-type examples but not for
    generic tensors (see ``condition_442_numeric``).
    """
    arr = as_array(t)
    _require(arr, n=3, name="condition_442")
    ss = schmidt_split(arr, 2)
    planes, value = [], 0.0
    for p in ss.slices[:2]:
        u, s, vt = np.linalg.svd(p)
        value += float(s[0] ** 2 + s[1] ** 2)
        planes.append([u[:, :2].T, vt[:2]])
    frames = {"planes": planes, "directions": [ss.gammas[0], ss.gammas[1]]}
    return CriterionResult("c442", value, frames, "analytic")


# --- two-term alternating engine ------------------------------------------

def _term_planes(t: np.ndarray, planes: list[np.ndarray], vec: np.ndarray, ranks) -> list[np.ndarray]:
    """Block-maximise one term's subspaces with the last-party vector fixed."""
    n_free = t.ndim - 1
    if n_free == 2 and ranks[0] == ranks[1]:
        # exact joint update: leading singular subspaces of the 3x3 slice
        m = np.einsum("abc,Rc->Rab", t, vec)
        u, _, vt = np.linalg.svd(m)
        r = ranks[0]
        return [np.swapaxes(u[..., :r], -1, -2), vt[:, :r]]
    planes = list(planes)
    for j in range(n_free):
        mats = [planes[i] if i != j else None for i in range(n_free)] + [vec[:, None, :]]
        x = _linalg.unfold(_linalg.multilinear(t, mats), j)
        planes[j] = _linalg.top_eigvecs(x @ np.swapaxes(x, -1, -2), ranks[j])
    return planes


def _last_gram(t: np.ndarray, planes: list[np.ndarray]) -> np.ndarray:
    y = _linalg.multilinear(t, planes + [None])
    y = y.reshape(y.shape[0], -1, 3)
    return np.swapaxes(y, -1, -2) @ y


def two_term_ascent(t, ranks1, ranks2, config: OptimizerConfig) -> dict:
    """Alternating maximisation of
    ||T x_j Q1_j x_N u||^2 + ||T x_j Q2_j x_N w||^2 over per-party subspaces
    Q1_j (dimension ranks1[j]), Q2_j (ranks2[j]) and orthonormal u, w.

    Every block update is an exact or guarded maximisation, so each restart's
    objective is non-decreasing; ``history`` records it per iteration.
    """
    arr = as_array(t)
    n_free = arr.ndim - 1
    restarts = config.restarts
    rng = np.random.default_rng(config.seed)
    init = _linalg.seed_frames(restarts, 2 * n_free + 1, rng)
    q1 = [init[:, j, : ranks1[j]] for j in range(n_free)]
    q2 = [init[:, n_free + j, : ranks2[j]] for j in range(n_free)]
    u, w = init[:, -1, 0].copy(), init[:, -1, 1].copy()

    history = []
    prev = np.full(restarts, -np.inf)
    converged = np.zeros(restarts, dtype=bool)
    for _ in range(config.max_iter):
        q1 = _term_planes(arr, q1, u, ranks1)
        q2 = _term_planes(arr, q2, w, ranks2)
        a, b = _last_gram(arr, q1), _last_gram(arr, q2)
        u, w, value = _linalg.best_orthonormal_pair(a, b, u, w)
        history.append(value)
        converged = np.abs(value - prev) < config.tol
        prev = value
        if converged.all():
            break
    history = np.array(history)
    best = int(np.argmax(prev))
    if not converged.any():
        log.warning("two-term ascent: no restart converged within %d iterations (spread %.3g)",
                    config.max_iter, prev.max() - prev.min())
    return {
        "value": float(prev[best]),
        "values": prev,
        "planes": [[p[best] for p in q1], [p[best] for p in q2]],
        "directions": [u[best], w[best]],
        "converged": int(converged.sum()),
        "history": history,
    }


def _two_term_result(criterion_id: str, arr, ranks1, ranks2, config) -> CriterionResult:
    out = two_term_ascent(arr, ranks1, ranks2, config)
    frames = {"planes": out["planes"], "directions": out["directions"]}
    return CriterionResult(
        criterion_id, out["value"], frames, "numeric",
        restarts_used=config.restarts,
        spread=float(out["values"].max() - out["values"].min()),
        converged_restarts=out["converged"],
        history=out["history"],
    )


def condition_442_numeric(t, config: OptimizerConfig = OptimizerConfig()) -> CriterionResult:
    """Direct maximisation of the 4x4x2 criterion over all local frames."""
    arr = as_array(t)
    _require(arr, n=3, name="condition_442")
    return _two_term_result("c442", arr, (2, 2), (2, 2), config)


def condition_332(t, config: OptimizerConfig = OptimizerConfig()) -> CriterionResult:
    """max T(a', b', c3)^2 + sum_{k,l in planes} T_{k l c2}^2 with c2 orthogonal to c3
    and unconstrained unit vectors a', b'."""
    arr = as_array(t)
    _require(arr, n=3, name="condition_332")
    return _two_term_result("c332", arr, (1, 1), (2, 2), config)


def condition_N(t, config: OptimizerConfig = OptimizerConfig()) -> CriterionResult:
    """Two-term criterion for the 4x...x4x2 family, N >= 3 parties."""
    arr = as_array(t)
    _require(arr, at_least=3, name="condition_N")
    ranks = (2,) * (arr.ndim - 1)
    return _two_term_result("cN", arr, ranks, ranks, config)


# --- standard (two settings per party) ------------------------------------

def condition_standard(t, config: OptimizerConfig = OptimizerConfig()) -> CriterionResult:
    """Squared maximal violation of the two-setting correlation inequalities,
    (max_settings sum_s |sum_k prod_j s_j^(k_j) E_k| / 2^N)^2, by see-saw over settings.

    Bounded above by ``standard_tensor_bound`` (shared-plane sum of squares).
    """
    arr = as_array(t)
    _require(arr, at_least=2, name="condition_standard")
    n = arr.ndim
    rng = np.random.default_rng(config.seed)
    starts = config.restarts * config.seesaw_starts_per_restart
    frames = _linalg.seed_frames(starts, n, rng)
    init = [np.ascontiguousarray(frames[:, j, :2]) for j in range(n)]
    values, settings = refine(arr, coefficients(InequalitySpec.of("standard", n)), init,
                              seesaw_iter=config.seesaw_max_iter)
    values = values / 2**n
    best = int(np.argmax(values))
    return CriterionResult(
        "standard", float(values[best] ** 2), {"settings": [s[best] for s in settings]}, "numeric",
        restarts_used=starts,
        spread=float(values.max() ** 2 - values.min() ** 2),
        converged_restarts=starts,
    )


def standard_tensor_bound(t, config: OptimizerConfig = OptimizerConfig()) -> CriterionResult:
    """max over one shared 2D plane per party of the sum of squared tensor
    components in those planes (higher-order orthogonal iteration)."""
    arr = as_array(t)
    _require(arr, at_least=2, name="standard_tensor_bound")
    n = arr.ndim
    rng = np.random.default_rng(config.seed)
    init = _linalg.seed_frames(config.restarts, n, rng)
    planes = [init[:, j, :2] for j in range(n)]
    prev = np.full(config.restarts, -np.inf)
    history = []
    converged = np.zeros(config.restarts, dtype=bool)
    for _ in range(config.max_iter):
        for j in range(n):
            x = _linalg.unfold(_linalg.multilinear(arr, [p if i != j else None for i, p in enumerate(planes)]), j)
            planes[j] = _linalg.top_eigvecs(x @ np.swapaxes(x, -1, -2), 2)
        core = _linalg.multilinear(arr, planes)
        value = (core.reshape(config.restarts, -1) ** 2).sum(axis=1)
        history.append(value)
        converged = np.abs(value - prev) < config.tol
        prev = value
        if converged.all():
            break
    best = int(np.argmax(prev))
    return CriterionResult(
        "standard-bound", float(prev[best]), {"planes": [p[best] for p in planes]}, "numeric",
        restarts_used=config.restarts, spread=float(prev.max() - prev.min()),
        converged_restarts=int(converged.sum()), history=np.array(history),
    )


# --- dispatch ---------------------------------------------------------------

_CRITERIA = {
    "standard": condition_standard,
    "c442": lambda t, config=OptimizerConfig(): condition_442_analytic(t),
    "c442-numeric": condition_442_numeric,
    "c332": condition_332,
    "cN": condition_N,
    "standard-bound": standard_tensor_bound,
}


def evaluate(t, criterion_id: str, config: OptimizerConfig = OptimizerConfig()) -> CriterionResult:
    try:
        fn = _CRITERIA[criterion_id]
    except KeyError:
        raise ValidationError(f"unknown criterion {criterion_id!r}; choose from {CRITERION_IDS}") from None
    return fn(t, config)


def criterion_for_family(family: str):
    """Numeric criterion whose square root matches the family's maximal
    left-hand side divided by its classical bound."""
    return {
        "f442": condition_442_numeric,
        "f332": condition_332,
        "fN": condition_N,
        "standard": condition_standard,
    }[family]


def noise_threshold(state, criterion_id: str, config: OptimizerConfig = OptimizerConfig()) -> float:
    """Critical visibility: full correlations of v*rho + (1-v)/2^N are v*T, so
    the violation factor scales linearly and the threshold is 1/factor."""
    t = compute_tensor(state) if isinstance(state, QuantumState) else state
    if not isinstance(t, CorrelationTensor):
        t = CorrelationTensor(t)
    return evaluate(t, criterion_id, config).threshold

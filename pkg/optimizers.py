"""
Optimizers for chunk-length schedules.

All routines minimize. Schedule optimizers work on the constrained simplex
{x >= min_len, sum(x) = 1}: Nelder-Mead and COBYLA search the first L - 1
lengths and every candidate is projected before evaluation; the
quasi-Newton routine is a generic box-bounded L-BFGS-B with a
finite-difference gradient and is wrapped for the simplex by
``simplex_quasi_newton``.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from enums import OptimizerKind
from schemas import MIN_CHUNK_LENGTH, OptimizerConfig
from utils.error_handler import InvalidInputError

logger = logging.getLogger("vqaa.optimizers")

Objective = Callable[[np.ndarray], float]


@dataclass
class SearchTrace:
    """Every evaluated point of one optimizer run."""
    points: List[np.ndarray] = field(default_factory=list)
    values: List[float] = field(default_factory=list)
    flags: List[str] = field(default_factory=list)

    @property
    def evals(self) -> int:
        return len(self.values)

    def best(self) -> Tuple[np.ndarray, float]:
        k = int(np.argmin(self.values))
        return self.points[k], self.values[k]


class _BudgetReached(Exception):
    pass


class _Recorder:
    """Counts evaluations and stops the optimizer at the budget."""

    def __init__(self, f: Objective, budget: int, transform: Callable[[np.ndarray], np.ndarray] = None):
        self.f = f
        self.budget = budget
        self.transform = transform or (lambda x: np.asarray(x, dtype=float))
        self.trace = SearchTrace()

    def __call__(self, x) -> float:
        if self.trace.evals >= self.budget:
            raise _BudgetReached()
        point = self.transform(np.asarray(x, dtype=float))
        value = float(self.f(point))
        self.trace.points.append(point)
        self.trace.values.append(value)
        return value


# ============================================================================
# Simplex geometry
# ============================================================================

def project_to_simplex(x: Sequence[float], min_len: float = MIN_CHUNK_LENGTH) -> np.ndarray:
    """Euclidean projection onto {x >= min_len, sum(x) = 1}."""
    x = np.asarray(x, dtype=float)
    n = x.size
    budget = 1.0 - n * min_len
    if budget < 0:
        raise InvalidInputError(f"{n} chunks of at least {min_len} cannot sum to 1")
    y = x - min_len
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - budget
    k = np.arange(1, n + 1)
    rho = int(np.nonzero(u - css / k > 0)[0][-1]) if np.any(u - css / k > 0) else 0
    shift = css[rho] / (rho + 1)
    return np.maximum(y - shift, 0.0) + min_len


def _complete(free: np.ndarray, min_len: float) -> np.ndarray:
    """Free L - 1 lengths plus the remainder, projected onto the simplex."""
    full = np.append(free, 1.0 - np.sum(free))
    return project_to_simplex(full, min_len)


# ============================================================================
# Optimizers
# ============================================================================

def nelder_mead(f: Objective, x0: Sequence[float], cfg: Optional[OptimizerConfig] = None) -> Tuple[np.ndarray, SearchTrace]:
    """
    Downhill simplex on the probability simplex.

    Args:
        f: Objective of a full length vector
        x0: Starting lengths (projected first)
        cfg: Budget, initial simplex size and tolerances

    Returns:
        Tuple[np.ndarray, SearchTrace]: Best lengths and every evaluation
    """
    cfg = cfg or OptimizerConfig()
    x0 = project_to_simplex(x0, cfg.min_len)
    if x0.size == 1:
        recorder = _Recorder(f, cfg.max_evals)
        recorder(x0)
        return x0, recorder.trace

    recorder = _Recorder(f, cfg.max_evals, lambda u: _complete(u, cfg.min_len))
    free0 = x0[:-1]
    simplex = [free0] + [free0 + cfg.simplex_scale * e for e in np.eye(free0.size)]
    try:
        minimize(
            recorder, free0, method="Nelder-Mead",
            options={"initial_simplex": np.array(simplex), "maxfev": cfg.max_evals,
                     "xatol": cfg.xtol, "fatol": cfg.ftol},
        )
    except _BudgetReached:
        recorder.trace.flags.append("budget_exhausted")
    return _finish(recorder.trace, "nelder_mead", cfg.max_evals)


def _fd_gradient(f: Callable[[np.ndarray], float], x: np.ndarray, fx: float,
                 bounds: Sequence[Tuple[float, float]], cfg: OptimizerConfig) -> np.ndarray:
    """Central differences with step max(min_rel_step |x_i|, min_step), one-sided at a bound."""
    grad = np.zeros_like(x)
    for i in range(x.size):
        h = max(cfg.min_rel_step * abs(x[i]), cfg.min_step)
        lo, hi = bounds[i]
        up, down = x.copy(), x.copy()
        up[i] += h
        down[i] -= h
        if up[i] <= hi and down[i] >= lo:
            grad[i] = (f(up) - f(down)) / (2 * h)
        elif up[i] <= hi:
            grad[i] = (f(up) - fx) / h
        else:
            grad[i] = (fx - f(down)) / h
    return grad


def bounded_quasi_newton(
    f: Objective,
    x0: Sequence[float],
    bounds: Sequence[Tuple[float, float]],
    cfg: Optional[OptimizerConfig] = None,
) -> Tuple[np.ndarray, SearchTrace]:
    """
    L-BFGS-B on a box with a finite-difference gradient.

    Every probe counts against ``cfg.max_evals``. A failed line search
    returns the best point seen with the ``line_search_failed`` flag.
    """
    cfg = cfg or OptimizerConfig()
    x0 = np.clip(np.asarray(x0, dtype=float), [b[0] for b in bounds], [b[1] for b in bounds])
    recorder = _Recorder(f, cfg.max_evals)

    def fun(x):
        fx = recorder(x)
        return fx, _fd_gradient(recorder, np.asarray(x, dtype=float), fx, bounds, cfg)

    try:
        result = minimize(fun, x0, jac=True, method="L-BFGS-B", bounds=bounds,
                          options={"maxcor": cfg.memory, "maxiter": cfg.max_iters,
                                   "ftol": cfg.ftol * 1e-3, "gtol": 1e-10})
        message = str(result.message).upper()
        if not result.success and "ABNORMAL" in message:
            recorder.trace.flags.append("line_search_failed")
            logger.warning(f"L-BFGS-B line search failed: {result.message}")
    except _BudgetReached:
        recorder.trace.flags.append("budget_exhausted")
    return _finish(recorder.trace, "quasi_newton", cfg.max_evals)


def simplex_quasi_newton(f: Objective, x0: Sequence[float], cfg: Optional[OptimizerConfig] = None) -> Tuple[np.ndarray, SearchTrace]:
    """``bounded_quasi_newton`` over L - 1 free lengths, the last being the remainder."""
    cfg = cfg or OptimizerConfig()
    x0 = project_to_simplex(x0, cfg.min_len)
    if x0.size == 1:
        return nelder_mead(f, x0, cfg)
    bounds = [(cfg.min_len, 1.0 - (x0.size - 1) * cfg.min_len)] * (x0.size - 1)
    free_best, trace = bounded_quasi_newton(lambda u: f(_complete(u, cfg.min_len)), x0[:-1], bounds, cfg)
    trace.points = [_complete(p, cfg.min_len) for p in trace.points]
    return _complete(free_best, cfg.min_len), trace


def cobyla_like(f: Objective, x0: Sequence[float], cfg: Optional[OptimizerConfig] = None) -> Tuple[np.ndarray, SearchTrace]:
    """Linear-approximation trust-region search (COBYLA) on the simplex."""
    cfg = cfg or OptimizerConfig()
    x0 = project_to_simplex(x0, cfg.min_len)
    recorder = _Recorder(f, cfg.max_evals, lambda u: _complete(u, cfg.min_len))
    if x0.size == 1:
        recorder(np.array([]))
        return _finish(recorder.trace, "cobyla")

    constraints = [
        {"type": "ineq", "fun": lambda u: u - cfg.min_len},
        {"type": "ineq", "fun": lambda u: 1.0 - np.sum(u) - cfg.min_len},
    ]
    try:
        minimize(recorder, x0[:-1], method="COBYLA", constraints=constraints,
                 options={"rhobeg": cfg.simplex_scale, "maxiter": cfg.max_evals, "tol": cfg.xtol})
    except _BudgetReached:
        recorder.trace.flags.append("budget_exhausted")
    return _finish(recorder.trace, "cobyla", cfg.max_evals)


def _finish(trace: SearchTrace, name: str, budget: Optional[int] = None) -> Tuple[np.ndarray, SearchTrace]:
    if budget is not None and trace.evals >= budget and "budget_exhausted" not in trace.flags:
        trace.flags.append("budget_exhausted")
    x_best, f_best = trace.best()
    if trace.flags:
        logger.warning(f"{name} stopped early ({', '.join(trace.flags)}); best {f_best:.6g} after {trace.evals} evaluations")
    else:
        logger.debug(f"{name} finished: best {f_best:.6g} after {trace.evals} evaluations")
    return x_best, trace


OPTIMIZERS = {
    OptimizerKind.NELDER_MEAD: nelder_mead,
    OptimizerKind.QUASI_NEWTON: simplex_quasi_newton,
    OptimizerKind.COBYLA_LIKE: cobyla_like,
}


def minimize_on_simplex(kind: OptimizerKind, f: Objective, x0: Sequence[float],
                        cfg: Optional[OptimizerConfig] = None) -> Tuple[np.ndarray, SearchTrace]:
    return OPTIMIZERS[OptimizerKind(kind)](f, x0, cfg)

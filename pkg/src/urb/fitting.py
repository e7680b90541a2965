"""Single-exponential fits ``A + B p**m``, the robustness bound and fidelity conversions."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .superops import Superoperator, is_cptp

MAX_ITER = 200
STEP_TOL = 1e-12
P_MIN = 1e-9
DEGENERATE_TOL = 1e-8
VALIDITY_FACTOR = 10.0


@dataclass(frozen=True)
class FitResult:
    A: float
    B: float
    p: float
    rms_residual: float
    per_point_residuals: tuple
    converged: bool
    m_values: tuple = ()
    iterations: int = 0
    degenerate: bool = False
    tail_below_noise: bool = False
    p_std_error: float = 0.0
    A_std_error: float = 0.0
    B_std_error: float = 0.0

    def model(self, m) -> np.ndarray:
        return self.A + self.B * self.p ** np.asarray(m, dtype=float)

    def as_dict(self) -> dict:
        return {
            "A": self.A,
            "B": self.B,
            "p": self.p,
            "p_std_error": self.p_std_error,
            "A_std_error": self.A_std_error,
            "B_std_error": self.B_std_error,
            "rms_residual": self.rms_residual,
            "per_point_residuals": list(self.per_point_residuals),
            "m_values": list(self.m_values),
            "converged": self.converged,
            "iterations": self.iterations,
            "degenerate": self.degenerate,
            "tail_below_noise": self.tail_below_noise,
        }

    def as_text(self) -> str:
        d = self.as_dict()
        d.pop("per_point_residuals")
        d.pop("m_values")
        return "\n".join(f"{k} = {v}" for k, v in d.items())


def _unpack(data, m_values, std_errors):
    if hasattr(data, "m_values") and hasattr(data, "estimates"):
        m = np.asarray(data.m_values, dtype=float)
        y = np.asarray(data.estimates, dtype=float)
        se = np.asarray(data.std_errors, dtype=float)
        n = data.sequences_per_length * data.shots_per_sequence
        # smoothed binomial floor so that p_hat in {0, 1} keeps a finite weight
        pt = (y * n + 1) / (n + 2)
        se = np.maximum(se, np.sqrt(pt * (1 - pt) / n))
        return m, y, se
    y = np.asarray(data, dtype=float)
    if m_values is None:
        raise ValueError("m_values are required with raw decay values")
    m = np.asarray(m_values, dtype=float)
    se = None if std_errors is None else np.asarray(std_errors, dtype=float)
    if se is not None and np.any(se <= 0):
        raise ValueError("std errors must be positive")
    return m, y, se


def _linear_ab(m, y, w, p):
    """Weighted least-squares ``(A, B)`` for fixed ``p`` and the weighted cost."""
    X = np.stack([np.ones_like(m), p**m], axis=1) * np.sqrt(w)[:, None]
    coef, *_ = np.linalg.lstsq(X, y * np.sqrt(w), rcond=None)
    r = X @ coef - y * np.sqrt(w)
    return coef[0], coef[1], float(r @ r)


def _initial(m, y, w):
    A0 = float(np.mean(y[-2:]))
    r = y - A0
    sign = np.sign(np.sum(r[:-2])) or 1.0
    mask = sign * r > 1e-14 * max(1.0, np.max(np.abs(y)))
    p0 = 0.5
    if np.count_nonzero(mask) >= 2:
        slope = np.polyfit(m[mask], np.log(sign * r[mask]), 1)[0]
        p0 = float(np.clip(np.exp(slope), P_MIN, 1.0))
    A, B, _ = _linear_ab(m, y, w, p0)
    return np.array([A, B, p0])


def _lm(m, y, w, theta):
    sw = np.sqrt(w)

    def resid(t):
        return (t[0] + t[1] * t[2] ** m - y) * sw

    def jac(t):
        pm = t[2] ** m
        dp = t[1] * m * t[2] ** (m - 1)
        return np.stack([np.ones_like(m), pm, dp], axis=1) * sw[:, None]

    r = resid(theta)
    cost = r @ r
    lam = 1e-3
    converged = False
    it = 0
    for it in range(1, MAX_ITER + 1):
        J = jac(theta)
        g = J.T @ r
        H = J.T @ J
        while True:
            step = np.linalg.lstsq(H + lam * np.diag(np.diag(H) + 1e-300), -g, rcond=None)[0]
            cand = theta + step
            cand[2] = min(max(cand[2], P_MIN), 1.0)
            rc = resid(cand)
            cc = rc @ rc
            if cc <= cost or lam > 1e16:
                break
            lam *= 10
        actual = cand - theta
        if cc <= cost:
            theta, r, cost = cand, rc, cc
            lam = max(lam / 10, 1e-12)
        if np.linalg.norm(actual) < STEP_TOL or cost == 0.0:
            converged = True
            break
        if lam > 1e16:
            # no descent direction left: at a minimum to working precision
            converged = bool(np.linalg.norm(g) <= 1e-10 * max(1.0, math.sqrt(cost)))
            break
    return theta, cost, converged, it


def fit_exponential(data, m_values=None, std_errors=None) -> FitResult:
    """Fit ``A + B p**m`` by damped Gauss-Newton.

    ``data`` is a DecayDataset or a sequence of values with ``m_values``.
    Weights are inverse variances when std errors are available.
    """
    m, y, se = _unpack(data, m_values, std_errors)
    if m.shape != y.shape or m.ndim != 1:
        raise ValueError("m_values and values must be 1-d of equal length")
    if np.unique(m).size < 4:
        raise ValueError("at least 4 distinct sequence lengths are required")
    order = np.argsort(m, kind="stable")
    m, y = m[order], y[order]
    se = None if se is None else se[order]
    w = np.ones_like(y) if se is None else 1.0 / se**2
    w = w / w.max()

    scale = max(1.0, float(np.max(np.abs(y))))
    if np.ptp(y) <= DEGENERATE_TOL * scale:
        A = float(np.average(y, weights=w))
        res = y - A
        return FitResult(
            A, 0.0, 1.0, float(np.sqrt(np.mean(res**2))), tuple(res.tolist()), True,
            tuple(m.tolist()), 0, degenerate=True,
        )

    theta, cost, conv, it = _lm(m, y, w, _initial(m, y, w))
    # variable-projection grid as a safety net against a poor start
    grid = np.linspace(0.01, 0.999, 200)
    costs = [_linear_ab(m, y, w, p)[2] for p in grid]
    k = int(np.argmin(costs))
    if not conv or costs[k] < cost * (1 - 1e-9):
        A, B, _ = _linear_ab(m, y, w, grid[k])
        t2, c2, conv2, it2 = _lm(m, y, w, np.array([A, B, grid[k]]))
        if c2 < cost or (conv2 and not conv):
            theta, cost, conv, it = t2, c2, conv2, it + it2

    A, B, p = (float(x) for x in theta)
    res = y - (A + B * p**m)
    J = np.stack([np.ones_like(m), p**m, B * m * p ** (m - 1)], axis=1)
    if se is None:
        cov = np.linalg.pinv(J.T @ J) * float(res @ res) / max(len(m) - 3, 1)
    else:
        Jw = J / se[:, None]
        cov = np.linalg.pinv(Jw.T @ Jw)
    errs = np.sqrt(np.clip(np.diag(cov), 0, None))
    degenerate = abs(B) <= DEGENERATE_TOL * scale
    tail = bool(se is not None and abs(B * p ** m[-1]) < se[-1])
    return FitResult(
        A, B, p, float(np.sqrt(np.mean(res**2))), tuple(res.tolist()), bool(conv),
        tuple(m.tolist()), it, degenerate, tail,
        float(errs[2]), float(errs[0]), float(errs[1]),
    )


@dataclass(frozen=True)
class RobustnessBound:
    bound_on_exponent_shift: float
    A0: float
    alpha: float
    M: int
    epsilon: float
    valid: bool

    def as_dict(self) -> dict:
        b = self.bound_on_exponent_shift
        return {
            "bound_on_exponent_shift": b if math.isfinite(b) else "inf",
            "A0": self.A0,
            "alpha": self.alpha,
            "M": self.M,
            "epsilon": self.epsilon,
            "valid": self.valid,
        }


def robustness_bound(A0: float, alpha: float, M: int, epsilon: float) -> RobustnessBound:
    """``|beta - alpha| <= 2 eps (alpha + 1) / (A0 alpha**M - 2 eps)``.

    ``valid`` requires ``eps < A0 alpha**M / 10``.
    """
    if not A0 > 0:
        raise ValueError("A0 must be positive")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if int(M) != M or M < 1:
        raise ValueError("M must be a positive integer")
    if not epsilon >= 0:
        raise ValueError("epsilon must be nonnegative")
    lead = A0 * alpha**M
    denom = lead - 2 * epsilon
    bound = 2 * epsilon * (alpha + 1) / denom if denom > 0 else math.inf
    valid = bool(denom > 0 and epsilon < lead / VALIDITY_FACTOR)
    return RobustnessBound(float(bound), float(A0), float(alpha), int(M), float(epsilon), valid)


def avg_fidelity(t: Superoperator) -> float:
    """Average gate fidelity with the identity, ``(tr R + d) / (d**2 + d)``."""
    if not is_cptp(t):
        raise ValueError("average fidelity needs a quantum channel")
    d = t.dim
    return float((np.trace(t.ptm) + d) / (d * d + d))


def exponent_to_fidelity(p: float, d: int) -> float:
    if d < 2:
        raise ValueError("d must be at least 2")
    return (p * (d - 1) + 1) / d


def fidelity_to_exponent(F: float, d: int) -> float:
    if d < 2:
        raise ValueError("d must be at least 2")
    return (d * F - 1) / (d - 1)

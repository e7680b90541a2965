"""Spectral split of a physical twirl into a near-unit rank-2 block and a remainder.

The frame follows the usual invariant-subspace construction.  With ``X1`` an
orthonormal basis of the Haar-twirl image and ``X2`` its complement, the
dominant right invariant subspace is written as the graph ``X1 + X2 P1``.
Together with the left dominant subspace ``Z1`` this gives

    R1 = X1 + X2 P1,          L1^T = (Z1^T R1)^{-1} Z1^T,
    L2^T = X2^T - P1 X1^T,    R2 = Y2 (L2^T Y2)^{-1},   Y2 = null(Z1^T),

so that ``Lambda = R1 A1 L1^T + R2 A2 L2^T`` with ``A_i = L_i^T Lambda R_i``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space, schur

from .superops import Superoperator, as_density_matrix, from_pauli_coefficients, trace_norm
from .twirling import V, GateEnsemble, TwirlingMatrix, haar_twirl, subspace, vec

UNIT_TOL = 1e-8
DEFECT_TOL = 1e-8
CHECK_SLACK = 1e-10
KAPPA_MAX = 16.0


class SpectralAmbiguityError(RuntimeError):
    pass


class FixedPointError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class SpectralSplit:
    lambda_unit: complex
    p: float
    dominant_right: np.ndarray = field(repr=False)
    dominant_left: np.ndarray = field(repr=False)
    remainder_norm: float
    kappa_estimate: float
    diagonalizable: bool
    eigenvalues: np.ndarray = field(repr=False)
    A1: np.ndarray = field(repr=False)
    A2: np.ndarray = field(repr=False)
    reconstruction_error: float
    subspace: str = V

    @property
    def dominant_eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.A1)


def _pick_dominant(w: np.ndarray) -> np.ndarray:
    order = sorted(range(len(w)), key=lambda i: (abs(w[i] - 1), -w[i].real))
    return np.array(order[:2])


def _sorted_schur(A: np.ndarray, radius: float) -> np.ndarray:
    T, Z, sdim = schur(A, output="real", sort=lambda x, y: abs(complex(x, y) - 1) <= radius)
    if sdim != 2:
        raise SpectralAmbiguityError(
            f"{sdim} eigenvalues tie for the dominant block; a rank-2 block is required"
        )
    return Z[:, :2]


def spectral_split(
    lam_phys: TwirlingMatrix,
    lam_haar: TwirlingMatrix | None = None,
    delta: float | None = None,
    sub: str = V,
) -> SpectralSplit:
    d = lam_phys.dim
    s = subspace(d, sub)
    A = s.restrict(lam_phys.mat)
    H = s.restrict((lam_haar or haar_twirl(d)).mat)

    hw, hv = np.linalg.eigh((H + H.T) / 2)
    X1 = hv[:, hw > 0.5]
    if X1.shape[1] != 2:
        raise ValueError("the Haar twirl restricted to the subspace must have rank 2")
    X2 = null_space(X1.T)

    w = np.linalg.eigvals(A)
    dist = np.abs(w - 1)
    if delta is not None and np.count_nonzero(dist <= 2 * delta + CHECK_SLACK) > 2:
        raise SpectralAmbiguityError(
            f"more than two eigenvalues lie within 2*delta = {2 * delta:.3g} of 1"
        )
    sel = _pick_dominant(w)
    second = np.sort(dist[sel])[1]
    rest = np.delete(dist, sel)
    radius = second * (1 + 1e-9) + 1e-13
    if rest.size and np.min(rest) <= radius:
        radius = second + 0.5 * (np.min(rest) - second)
    Y1 = _sorted_schur(A, radius)
    Z1 = _sorted_schur(A.T, radius)

    P1 = X2.T @ Y1 @ np.linalg.inv(X1.T @ Y1)
    R1 = X1 + X2 @ P1
    L1T = np.linalg.solve(Z1.T @ R1, Z1.T)
    L2T = X2.T - P1 @ X1.T
    Y2 = null_space(Z1.T)
    R2 = Y2 @ np.linalg.inv(L2T @ Y2)

    A1 = L1T @ A @ R1
    A2 = L2T @ A @ R2
    recon = R1 @ A1 @ L1T + R2 @ A2 @ L2T
    err = float(np.linalg.norm(recon - A))

    lam = np.linalg.eigvals(A1)
    i_unit = int(np.argmin(np.abs(lam - 1)))
    lam_unit, lam_p = lam[i_unit], lam[1 - i_unit]
    if abs(lam_p.imag) > 1e-9:
        raise SpectralAmbiguityError(f"decay eigenvalue {lam_p:.6g} is not real")
    diagonalizable = True
    if abs(lam[0] - lam[1]) <= DEFECT_TOL:
        diagonalizable = bool(np.linalg.norm(A1 - lam.mean() * np.eye(2), 2) <= DEFECT_TOL)

    remainder = float(np.linalg.norm(A2, 2)) if A2.size else 0.0
    kappa = float(np.linalg.norm(L2T, 2) * np.linalg.norm(R2, 2)) if A2.size else 1.0
    return SpectralSplit(
        lambda_unit=complex(lam_unit),
        p=float(lam_p.real),
        dominant_right=s.basis @ R1,
        dominant_left=s.basis @ L1T.T,
        remainder_norm=remainder,
        kappa_estimate=kappa,
        diagonalizable=diagonalizable,
        eigenvalues=w,
        A1=A1,
        A2=A2,
        reconstruction_error=err,
        subspace=s.which,
    )


@dataclass(frozen=True)
class CorollaryReport:
    gamma: float
    delta: float
    hypothesis_ok: bool
    eig_close: bool
    remainder_ok: bool
    kappa_ok: bool
    remainder_norm: float
    kappa_estimate: float
    eig_distances: tuple
    norm: str = "so"

    @property
    def all_ok(self) -> bool:
        return self.hypothesis_ok and self.eig_close and self.remainder_ok and self.kappa_ok

    def as_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "delta": self.delta,
            "hypothesis_ok": self.hypothesis_ok,
            "eig_close": self.eig_close,
            "remainder_ok": self.remainder_ok,
            "kappa_ok": self.kappa_ok,
            "remainder_norm": self.remainder_norm,
            "kappa_estimate": self.kappa_estimate,
            "eig_distances": list(self.eig_distances),
            "norm": self.norm,
        }


def verify_corollary(split: SpectralSplit, gamma: float, delta: float, norm: str = "so") -> CorollaryReport:
    """Check the perturbation corollary's conclusions on a computed split.

    Comparisons carry an absolute slack of 1e-10 for roundoff.
    """
    if gamma < 0 or delta < 0:
        raise ValueError("gamma and delta must be nonnegative")
    dist = tuple(float(abs(1 - x)) for x in split.dominant_eigenvalues)
    return CorollaryReport(
        gamma=gamma,
        delta=delta,
        hypothesis_ok=bool(delta <= (1 - gamma) / 11),
        eig_close=bool(all(x <= 2 * delta + CHECK_SLACK for x in dist)),
        remainder_ok=bool(split.remainder_norm <= gamma + 6 * delta + CHECK_SLACK),
        kappa_ok=bool(split.kappa_estimate <= KAPPA_MAX),
        remainder_norm=split.remainder_norm,
        kappa_estimate=split.kappa_estimate,
        eig_distances=dist,
        norm=norm,
    )


def fixed_point_state(e: GateEnsemble, max_iter: int = 100_000) -> np.ndarray:
    """State fixed by the averaged inverting channel ``sum_g p_g phi*(g)``."""
    C = e.averaged_inverting().ptm
    d = e.dim
    w, vecs = np.linalg.eig(C)
    near = np.flatnonzero(np.abs(w - 1) <= UNIT_TOL)
    if near.size == 0:
        raise FixedPointError("averaged inverting map has no eigenvalue 1")
    if near.size == 1:
        v = vecs[:, near[0]]
        v = (v / v[0]).real
    else:
        # Cesaro-averaged power iteration from the maximally mixed state
        x = np.zeros(d * d)
        x[0] = 1.0
        acc = np.zeros_like(x)
        for k in range(1, max_iter + 1):
            acc += x
            x = C @ x
            if k % 64 == 0 and np.linalg.norm(C @ (acc / k) - acc / k) < 1e-13:
                break
        v = acc / k
        v = v / v[0]
    rho = from_pauli_coefficients(v / d, d)
    rho = (rho + rho.conj().T) / 2
    rho = as_density_matrix(rho, tol=1e-9)
    fixed = from_pauli_coefficients(C @ (v / d), d)
    if trace_norm(fixed - rho) > 1e-9:
        raise FixedPointError("power iteration did not reach a fixed point")
    return rho


def replacement_superop(rho: np.ndarray) -> Superoperator:
    """``E_rho : X -> tr[X] rho`` as a superoperator."""
    from .superops import pauli_coefficients

    d = rho.shape[0]
    ptm = np.zeros((d * d, d * d))
    ptm[:, 0] = d * pauli_coefficients(rho)
    return Superoperator(ptm)


def unit_eigen_residual(lam_phys: TwirlingMatrix, rho_star: np.ndarray) -> float:
    """``||Lambda_R(E_rho*) - E_rho*||`` in vectorized coordinates."""
    v = vec(replacement_superop(rho_star).ptm)
    return float(np.linalg.norm(lam_phys.mat @ v - v))

"""
#########################################
##      created by: Al Muller
##       filename: cvmdi/gaussian.py
#########################################

Mode-labelled covariance-matrix algebra for zero-mean Gaussian states.

Conventions used throughout the package:
- xpxp ordering: mode i occupies rows/columns 2i (x) and 2i+1 (p);
- shot-noise units, the vacuum has covariance identity;
- symplectic form is the direct sum of [[0, 1], [-1, 0]] blocks;
- entropies are in bits.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.linalg import block_diag, schur

from .errors import (
    ContractViolation,
    DomainError,
    NumericalFailure,
    SingularMeasurementError,
    UnphysicalStateError,
)

ModeLabel = str
Quadrature = Literal["x", "p"]

SYMMETRY_RTOL = 1e-12
PAIRING_RTOL = 1e-8
PHYSICAL_TOL = 1e-9
CLAMP_BAND = 1e-6

_I2 = np.eye(2)
_Z2 = np.diag([1.0, -1.0])
_J2 = np.array([[0.0, 1.0], [-1.0, 0.0]])


@dataclass(frozen=True)
class CovarianceMatrix:
    """Real symmetric 2N x 2N covariance matrix over N labelled modes."""

    matrix: np.ndarray
    labels: tuple[ModeLabel, ...]

    def __post_init__(self) -> None:
        labels = tuple(str(x) for x in self.labels)
        mat = np.array(self.matrix, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ContractViolation(f"covariance matrix must be square, got shape {mat.shape}")
        if mat.shape[0] != 2 * len(labels):
            raise ContractViolation(
                f"matrix dimension {mat.shape[0]} does not match {len(labels)} mode labels"
            )
        if len(set(labels)) != len(labels):
            raise ContractViolation(f"duplicate mode labels: {labels}")
        if not np.all(np.isfinite(mat)):
            raise ContractViolation("covariance matrix has non-finite entries")
        scale = max(1.0, float(np.max(np.abs(mat)))) if mat.size else 1.0
        if mat.size and np.max(np.abs(mat - mat.T)) > SYMMETRY_RTOL * scale:
            raise ContractViolation("covariance matrix is not symmetric")
        mat = 0.5 * (mat + mat.T)
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "labels", labels)

    @property
    def n_modes(self) -> int:
        return len(self.labels)

    def index(self, label: ModeLabel) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ContractViolation(f"unknown mode label {label!r}; have {self.labels}") from None

    def block(self, a: ModeLabel, b: ModeLabel | None = None) -> np.ndarray:
        """2x2 block between modes a and b (b defaults to a)."""
        i = self.index(a)
        j = self.index(b if b is not None else a)
        return self.matrix[2 * i : 2 * i + 2, 2 * j : 2 * j + 2].copy()

    def variance(self, label: ModeLabel, quadrature: Quadrature) -> float:
        i = self.index(label)
        q = 2 * i + _quadrature_offset(quadrature)
        return float(self.matrix[q, q])


@dataclass(frozen=True)
class SymplecticSpectrum:
    """Symplectic eigenvalues, descending."""

    values: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    @property
    def minimum(self) -> float:
        return min(self.values) if self.values else math.inf


@dataclass(frozen=True)
class WilliamsonForm:
    """V = S diag(nu_1, nu_1, ..., nu_N, nu_N) S^T with S symplectic."""

    nu: np.ndarray
    symplectic: np.ndarray


def _quadrature_offset(quadrature: str) -> int:
    if quadrature == "x":
        return 0
    if quadrature == "p":
        return 1
    raise ContractViolation(f"quadrature must be 'x' or 'p', got {quadrature!r}")


def _quad_indices(mode_indices: Iterable[int]) -> list[int]:
    out: list[int] = []
    for i in mode_indices:
        out.extend((2 * i, 2 * i + 1))
    return out


def _require_variance(v: float, what: str = "variance") -> float:
    v = float(v)
    if not math.isfinite(v) or v < 1.0:
        raise DomainError(f"{what} must be >= 1 (shot-noise units), got {v!r}")
    return v


def symplectic_form(n_modes: int) -> np.ndarray:
    return np.kron(np.eye(n_modes), _J2)


# ---------------------------------------------------------------------------
# constructors


def epr_state(v: float, labels: tuple[ModeLabel, ModeLabel] = ("A1", "A2")) -> CovarianceMatrix:
    """Two-mode squeezed vacuum [[V I, zeta Z], [zeta Z, V I]], zeta = sqrt(V^2 - 1)."""
    v = _require_variance(v, "EPR variance")
    zeta = math.sqrt(v * v - 1.0)
    mat = np.block([[v * _I2, zeta * _Z2], [zeta * _Z2, v * _I2]])
    return CovarianceMatrix(mat, tuple(labels))


def thermal_state(v: float, label: ModeLabel = "v") -> CovarianceMatrix:
    v = _require_variance(v, "thermal variance")
    return CovarianceMatrix(v * _I2, (label,))


def vacuum(label: ModeLabel = "v") -> CovarianceMatrix:
    return thermal_state(1.0, label)


# ---------------------------------------------------------------------------
# register plumbing


def direct_sum(*states: CovarianceMatrix) -> CovarianceMatrix:
    if not states:
        raise ContractViolation("direct_sum needs at least one state")
    labels: list[ModeLabel] = []
    for s in states:
        labels.extend(s.labels)
    return CovarianceMatrix(block_diag(*(s.matrix for s in states)), tuple(labels))


def partial_trace(state: CovarianceMatrix, keep: Sequence[ModeLabel]) -> CovarianceMatrix:
    """Marginal over the modes in `keep`, in that order."""
    keep = tuple(keep)
    if len(set(keep)) != len(keep):
        raise ContractViolation(f"duplicate labels in keep: {keep}")
    q = _quad_indices(state.index(m) for m in keep)
    return CovarianceMatrix(state.matrix[np.ix_(q, q)], keep)


def reorder(state: CovarianceMatrix, order: Sequence[ModeLabel]) -> CovarianceMatrix:
    order = tuple(order)
    if sorted(order) != sorted(state.labels):
        raise ContractViolation(f"reorder needs a permutation of {state.labels}, got {order}")
    return partial_trace(state, order)


def rename(state: CovarianceMatrix, mapping: Mapping[ModeLabel, ModeLabel]) -> CovarianceMatrix:
    for old in mapping:
        state.index(old)
    labels = tuple(mapping.get(x, x) for x in state.labels)
    return CovarianceMatrix(state.matrix, labels)


# ---------------------------------------------------------------------------
# symplectic transforms


def apply_symplectic(
    state: CovarianceMatrix, s: np.ndarray, modes: Sequence[ModeLabel]
) -> CovarianceMatrix:
    """Conjugate `state` by `s`, which acts on `modes` and as identity elsewhere."""
    modes = tuple(modes)
    if len(set(modes)) != len(modes):
        raise ContractViolation(f"duplicate modes: {modes}")
    s = np.asarray(s, dtype=float)
    if s.shape != (2 * len(modes), 2 * len(modes)):
        raise ContractViolation(f"symplectic of shape {s.shape} does not act on {len(modes)} modes")
    q = _quad_indices(state.index(m) for m in modes)
    full = np.eye(2 * state.n_modes)
    full[np.ix_(q, q)] = s
    return CovarianceMatrix(full @ state.matrix @ full.T, state.labels)


def beamsplitter_matrix(t: float) -> np.ndarray:
    """out_a = sqrt(T) a + sqrt(1-T) b, out_b = -sqrt(1-T) a + sqrt(T) b."""
    t = float(t)
    if not (0.0 <= t <= 1.0):
        raise DomainError(f"beamsplitter transmittance must be in [0, 1], got {t!r}")
    c, s = math.sqrt(t), math.sqrt(1.0 - t)
    return np.block([[c * _I2, s * _I2], [-s * _I2, c * _I2]])


def apply_beamsplitter(
    state: CovarianceMatrix, a: ModeLabel, b: ModeLabel, t: float
) -> CovarianceMatrix:
    if a == b:
        raise ContractViolation("beamsplitter needs two distinct modes")
    return apply_symplectic(state, beamsplitter_matrix(t), (a, b))


# ---------------------------------------------------------------------------
# spectra and entropies


def _as_matrix(state: CovarianceMatrix | np.ndarray) -> np.ndarray:
    if isinstance(state, CovarianceMatrix):
        return state.matrix
    mat = np.asarray(state, dtype=float)
    n = mat.shape[0] // 2
    return CovarianceMatrix(mat, tuple(f"m{i}" for i in range(n))).matrix


def symplectic_eigenvalues(state: CovarianceMatrix | np.ndarray) -> SymplecticSpectrum:
    mat = _as_matrix(state)
    n = mat.shape[0] // 2
    if n == 0:
        return SymplecticSpectrum(())
    i_omega = 1j * symplectic_form(n)
    try:
        w, u = np.linalg.eigh(mat)
        if w.min() > 0.0:
            root = (u * np.sqrt(w)) @ u.T
            eig = np.linalg.eigvalsh(root @ i_omega @ root)
        else:
            eig = np.linalg.eigvals(i_omega @ mat)
    except np.linalg.LinAlgError as e:
        raise NumericalFailure(f"symplectic eigenvalue solver failed: {e}") from e
    mags = np.sort(np.abs(eig))[::-1]
    upper, lower = mags[0::2], mags[1::2]
    if np.any(np.abs(upper - lower) > PAIRING_RTOL * np.maximum(1.0, upper)):
        raise NumericalFailure(f"unpaired eigenvalues of i*Omega*gamma: {mags}")
    return SymplecticSpectrum(tuple(float(x) for x in 0.5 * (upper + lower)))


def min_symplectic_eigenvalue(state: CovarianceMatrix | np.ndarray) -> float:
    return symplectic_eigenvalues(state).minimum


def physicality_floor(state: CovarianceMatrix | np.ndarray) -> float:
    """Smallest symplectic eigenvalue, or the smallest ordinary eigenvalue if gamma is not > 0.

    The state is physical iff the result is >= 1.
    """
    mat = _as_matrix(state)
    if mat.size == 0:
        return math.inf
    w_min = float(np.linalg.eigvalsh(mat).min())
    if w_min <= 0.0:
        return w_min
    return min_symplectic_eigenvalue(mat)


def require_physical(
    state: CovarianceMatrix, *, what: str = "state", tol: float = PHYSICAL_TOL
) -> CovarianceMatrix:
    nu_min = physicality_floor(state)
    if nu_min < 1.0 - tol:
        raise UnphysicalStateError(
            f"{what} violates the uncertainty relation", min_symplectic_eigenvalue=nu_min
        )
    return state


def g_entropy(x: float) -> float:
    """(x+1) log2(x+1) - x log2(x), the entropy of a thermal state with mean photon number x."""
    x = float(x)
    if x < -1e-12 or math.isnan(x):
        raise DomainError(f"mean photon number must be >= 0, got {x!r}")
    if x <= 0.0:
        return 0.0
    return (x + 1.0) * math.log2(x + 1.0) - x * math.log2(x)


def _clamped(nu: float) -> float:
    if nu < 1.0 - CLAMP_BAND:
        raise UnphysicalStateError(
            "symplectic eigenvalue below the vacuum bound", min_symplectic_eigenvalue=nu
        )
    return max(nu, 1.0)


def spectrum_entropy(spectrum: SymplecticSpectrum) -> float:
    return sum(g_entropy((_clamped(nu) - 1.0) / 2.0) for nu in spectrum)


def gaussian_entropy(state: CovarianceMatrix | SymplecticSpectrum) -> float:
    """Von Neumann entropy in bits."""
    if isinstance(state, SymplecticSpectrum):
        return spectrum_entropy(state)
    floor = physicality_floor(state)
    if floor <= 0.0:
        raise UnphysicalStateError(
            "covariance matrix is not positive definite", min_symplectic_eigenvalue=floor
        )
    return spectrum_entropy(symplectic_eigenvalues(state))


# ---------------------------------------------------------------------------
# measurements


def _split(state: CovarianceMatrix, m: ModeLabel) -> tuple[list[int], list[int], tuple]:
    i = state.index(m)
    rest_modes = [k for k in range(state.n_modes) if k != i]
    rest_labels = tuple(state.labels[k] for k in rest_modes)
    return _quad_indices([i]), _quad_indices(rest_modes), rest_labels


def condition_homodyne(
    state: CovarianceMatrix, m: ModeLabel, quadrature: Quadrature
) -> CovarianceMatrix:
    """Condition the other modes on a homodyne outcome of `quadrature` on mode `m`."""
    i = state.index(m)
    q = 2 * i + _quadrature_offset(quadrature)
    _, rest, rest_labels = _split(state, m)
    var = float(state.matrix[q, q])
    scale = max(1.0, float(np.max(np.abs(np.diag(state.matrix)))))
    if not var > 1e-14 * scale:
        raise SingularMeasurementError(f"homodyne on {m}.{quadrature} has variance {var!r}")
    c = state.matrix[rest, q]
    out = state.matrix[np.ix_(rest, rest)] - np.outer(c, c) / var
    return CovarianceMatrix(out, rest_labels)


def condition_heterodyne(state: CovarianceMatrix, m: ModeLabel) -> CovarianceMatrix:
    """Condition the other modes on a heterodyne outcome of mode `m`."""
    mq, rest, rest_labels = _split(state, m)
    sigma = state.matrix[np.ix_(rest, mq)]
    gm = state.matrix[np.ix_(mq, mq)]
    try:
        gain = np.linalg.solve(gm + _I2, sigma.T)
    except np.linalg.LinAlgError as e:
        raise SingularMeasurementError(f"heterodyne on {m}: {e}") from e
    return CovarianceMatrix(state.matrix[np.ix_(rest, rest)] - sigma @ gain, rest_labels)


# ---------------------------------------------------------------------------
# normal form and purification


def _sqrtm_pd(mat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    w, u = np.linalg.eigh(mat)
    if w.min() <= 0.0:
        raise UnphysicalStateError(
            "covariance matrix is not positive definite", min_symplectic_eigenvalue=float("nan")
        )
    root = (u * np.sqrt(w)) @ u.T
    inv_root = (u / np.sqrt(w)) @ u.T
    return root, inv_root


def williamson(state: CovarianceMatrix) -> WilliamsonForm:
    """Williamson normal form computed from the real Schur form of V^-1/2 Omega V^-1/2."""
    n = state.n_modes
    root, inv_root = _sqrtm_pd(state.matrix)
    a = inv_root @ symplectic_form(n) @ inv_root
    a = 0.5 * (a - a.T)
    t_form, o = schur(a, output="real")
    nu = np.empty(n)
    for k in range(n):
        b = t_form[2 * k, 2 * k + 1]
        c = t_form[2 * k + 1, 2 * k]
        t_k = math.sqrt(abs(b * c))
        if t_k == 0.0:
            raise NumericalFailure("degenerate Schur block in Williamson decomposition")
        if b < 0.0:
            o[:, [2 * k, 2 * k + 1]] = o[:, [2 * k + 1, 2 * k]]
        nu[k] = 1.0 / t_k
    d_inv_root = np.diag(np.repeat(1.0 / np.sqrt(nu), 2))
    return WilliamsonForm(nu=nu, symplectic=root @ o @ d_inv_root)


def purify(state: CovarianceMatrix, ancilla_labels: Sequence[ModeLabel]) -> CovarianceMatrix:
    """Pure state on state.labels + ancilla_labels whose marginal is `state`."""
    ancilla_labels = tuple(ancilla_labels)
    n = state.n_modes
    if len(ancilla_labels) != n:
        raise ContractViolation(f"purification of {n} modes needs {n} ancilla labels")
    wf = williamson(state)
    nu = np.array([_clamped(float(x)) for x in wf.nu])
    zeta = np.sqrt(np.maximum(nu * nu - 1.0, 0.0))
    d = np.kron(np.diag(nu), _I2)
    c = np.kron(np.diag(zeta), _Z2)
    pure = np.block([[d, c], [c, d]])
    s = block_diag(wf.symplectic, np.eye(2 * n))
    return CovarianceMatrix(s @ pure @ s.T, state.labels + ancilla_labels)

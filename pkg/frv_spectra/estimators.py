"""
Covariance estimation, symmetric eigendecomposition, whitening and the
cross-correlation matrix between two whitened panels.
"""

from dataclasses import dataclass
from enum import StrEnum
from pathlib import Path
from typing import Tuple

import numpy as np
import pandas as pd
import scipy.linalg

from . import LOG
from .errors import DimensionError, LagError, RankError
from .panel import TimePanel


class SpectrumKind(StrEnum):
    EIGENVALUES = "eigenvalues"
    SINGULAR_VALUES = "singular-values"


def _as_matrix(values: "TimePanel | np.ndarray") -> np.ndarray:
    if isinstance(values, TimePanel):
        return values.values
    matrix = np.asarray(values, dtype=np.float64)
    if matrix.ndim != 2:
        raise DimensionError(f"Expected a 2D matrix, got shape {matrix.shape}")
    return matrix


@dataclass(frozen=True, eq=False)
class CovMatrix:
    """
    A symmetric dim x dim covariance (or correlation) matrix.

    Attributes:
        entries (np.ndarray): The matrix, symmetric within 1e-12.
        labels (tuple[str, ...] | None): Series labels, if known.
    """

    entries: np.ndarray
    labels: Tuple[str, ...] | None = None

    def __post_init__(self):
        entries = np.array(self.entries, dtype=np.float64)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise DimensionError(f"Covariance matrix must be square, got shape {entries.shape}")
        scale = max(1.0, float(np.max(np.abs(entries), initial=0.0)))
        if np.max(np.abs(entries - entries.T), initial=0.0) > 1e-12 * scale:
            raise DimensionError("Covariance matrix is not symmetric")
        entries = 0.5 * (entries + entries.T)
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True, eq=False)
class WhitenedPanel:
    """
    A panel rotated and rescaled onto its retained principal directions.

    Attributes:
        values (np.ndarray): K x T matrix with values @ values.T = identity.
        retained_eigs (tuple[tuple[float, int], ...]): Retained covariance
            eigenvalues with their index in the ascending eigenvalue order.
        dropped (int): Number of eigen-directions below the threshold.
    """

    values: np.ndarray
    retained_eigs: Tuple[Tuple[float, int], ...]
    dropped: int = 0

    @property
    def rank(self) -> int:
        return self.values.shape[0]

    @property
    def n_obs(self) -> int:
        return self.values.shape[1]

    def projector(self) -> np.ndarray:
        """The T x T matrix values.T @ values (K eigenvalues 1, the rest 0)."""
        return self.values.T @ self.values


@dataclass(frozen=True, eq=False)
class CrossMatrix:
    """An M x N matrix correlating M output series with N input series."""

    entries: np.ndarray

    @property
    def shape(self) -> Tuple[int, int]:
        return self.entries.shape  # type: ignore[return-value]


@dataclass(frozen=True, eq=False)
class EmpiricalSpectrum:
    """
    Eigenvalues or singular values of one sample matrix, sorted descending.
    """

    values: np.ndarray
    kind: SpectrumKind = SpectrumKind.EIGENVALUES

    def __post_init__(self):
        values = np.sort(np.asarray(self.values, dtype=np.float64).ravel())[::-1].copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "kind", SpectrumKind(self.kind))

    def __len__(self) -> int:
        return self.values.size

    def ascending(self) -> np.ndarray:
        return self.values[::-1].copy()

    def nonzero(self, tol: float = 1e-10) -> "EmpiricalSpectrum":
        """The spectrum without values below `tol` (numerical zeros)."""
        return EmpiricalSpectrum(self.values[self.values > tol], self.kind)

    def save_csv(self, path: str | Path) -> Path:
        column = "eigenvalue" if self.kind == SpectrumKind.EIGENVALUES else "singular_value"
        path = Path(path)
        pd.DataFrame({column: self.values}).to_csv(
            path, index=False, float_format="%.17g", lineterminator="\n"
        )
        return path


def pearson_cov(panel: "TimePanel | np.ndarray") -> CovMatrix:
    """
    Pearson estimator c = Y Y^T / T of a standardized panel.

    Args:
        panel (TimePanel | np.ndarray): Standardized N x T panel.

    Returns:
        CovMatrix: The N x N correlation matrix.
    """
    y = _as_matrix(panel)
    labels = panel.labels if isinstance(panel, TimePanel) else None
    return CovMatrix(y @ y.T / y.shape[1], labels)


def lagged_cov(
    panel_x: "TimePanel | np.ndarray", panel_y: "TimePanel | np.ndarray", lag: int
) -> CrossMatrix:
    """
    Time-lagged cross-covariance between two panels.

    Entry (j, i) is (1/T') sum_a X[i, a] Y[j, a + lag] over the overlapping
    window of length T' = T - lag, so the result is M x N (outputs by inputs).

    Args:
        panel_x (TimePanel | np.ndarray): N x T input panel.
        panel_y (TimePanel | np.ndarray): M x T output panel.
        lag (int): Non-negative lag of Y behind X.

    Returns:
        CrossMatrix: The M x N lagged covariance.

    Raises:
        DimensionError: If the panels have different lengths.
        LagError: If lag is negative or leaves no overlapping window.
    """
    x, y = _as_matrix(panel_x), _as_matrix(panel_y)
    if x.shape[1] != y.shape[1]:
        raise DimensionError(f"Panels have different lengths: {x.shape[1]} != {y.shape[1]}")
    length = x.shape[1]
    if lag < 0 or lag >= length:
        raise LagError(f"Lag {lag} is outside [0, {length - 1}] for T={length}")

    overlap = length - lag
    return CrossMatrix(y[:, lag:] @ x[:, :overlap].T / overlap)


def sym_eig(cov: "CovMatrix | np.ndarray") -> Tuple[np.ndarray, np.ndarray]:
    """
    Eigen-decompose a symmetric matrix.

    Returns:
        Tuple[np.ndarray, np.ndarray]: Eigenvalues ascending and the matrix whose
        columns are the matching orthonormal eigenvectors.
    """
    matrix = cov.entries if isinstance(cov, CovMatrix) else np.asarray(cov, dtype=np.float64)
    eigenvalues, eigenvectors = scipy.linalg.eigh(matrix)
    return eigenvalues, eigenvectors


def mp_edge_threshold(ratio: float, fraction: float = 0.1, floor: float = 1e-10) -> float:
    """
    Whitening floor tied to the Marcenko-Pastur lower edge (1 - sqrt(r))^2.

    Eigenvalues far below the lower edge of the white-noise spectrum carry no
    usable signal. Returns fraction * (1 - sqrt(r))^2, never less than `floor`.
    """
    return max(floor, fraction * (1.0 - float(np.sqrt(ratio))) ** 2)


def whiten(panel: "TimePanel | np.ndarray", drop_threshold: float = 1e-10) -> WhitenedPanel:
    """
    Transform a panel into uncorrelated unit-variance directions.

    With c = X X^T / T = V L V^T, the result is L_K^(-1/2) V_K^T X / sqrt(T)
    over the eigenvalues above `drop_threshold`, so its Gram matrix is the
    K x K identity.

    Args:
        panel (TimePanel | np.ndarray): Standardized N x T panel.
        drop_threshold (float): Eigenvalue floor; 1e-10 drops only the
            numerical null space.

    Returns:
        WhitenedPanel: The whitened K x T panel.

    Raises:
        RankError: If no eigenvalue exceeds the threshold.
    """
    x = _as_matrix(panel)
    length = x.shape[1]
    eigenvalues, eigenvectors = sym_eig(x @ x.T / length)

    keep = np.flatnonzero(eigenvalues > drop_threshold)
    if keep.size == 0:
        raise RankError(
            f"All {eigenvalues.size} eigenvalues are below the whitening threshold"
            f" {drop_threshold:g} (largest {eigenvalues[-1]:.3g})"
        )

    kept = eigenvalues[keep]
    values = (eigenvectors[:, keep].T @ x) / np.sqrt(kept)[:, None] / np.sqrt(length)

    dropped = eigenvalues.size - keep.size
    LOG.info(f"Whitening retained {keep.size} of {eigenvalues.size} directions")
    if dropped:
        LOG.debug(f"Dropped eigenvalues: {eigenvalues[:dropped]}")

    return WhitenedPanel(
        values, tuple((float(e), int(i)) for e, i in zip(kept, keep)), dropped=int(dropped)
    )


def align_lagged(x: TimePanel, y: TimePanel, lag: int) -> Tuple[TimePanel, TimePanel]:
    """
    Restrict X to its first T - lag observations and Y to its last T - lag, so
    that column a of both refers to (X at time a, Y at time a + lag).

    Raises:
        DimensionError: If the panels have different lengths.
        LagError: If lag is negative or leaves fewer than 2 observations.
    """
    if x.n_obs != y.n_obs:
        raise DimensionError(f"Panels have different lengths: {x.n_obs} != {y.n_obs}")
    if lag < 0 or x.n_obs - lag < 2:
        raise LagError(f"Lag {lag} leaves no usable window for T={x.n_obs}")
    return x.window(0, x.n_obs - lag), y.window(lag, y.n_obs)


def cross_matrix(out_w: WhitenedPanel, in_w: WhitenedPanel) -> CrossMatrix:
    """
    G = Y_hat X_hat^T between whitened outputs (M x T) and inputs (N x T).

    Raises:
        DimensionError: If the panels have different lengths.
    """
    if out_w.n_obs != in_w.n_obs:
        raise DimensionError(
            f"Whitened panels have different lengths: {out_w.n_obs} != {in_w.n_obs}"
        )
    return CrossMatrix(out_w.values @ in_w.values.T)


def svd(g: "CrossMatrix | np.ndarray") -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Singular value decomposition G = U diag(s) V^T.

    Returns:
        Tuple[np.ndarray, np.ndarray, np.ndarray]: Singular values descending,
        left vectors U (M x k) and right vectors V (N x k), k = min(M, N).
    """
    matrix = g.entries if isinstance(g, CrossMatrix) else np.asarray(g, dtype=np.float64)
    if min(matrix.shape) == 0:
        return np.zeros(0), np.zeros((matrix.shape[0], 0)), np.zeros((matrix.shape[1], 0))
    u, s, vh = scipy.linalg.svd(matrix, full_matrices=False)
    return s, u, vh.T


def eigen_spectrum(cov: "CovMatrix | np.ndarray") -> EmpiricalSpectrum:
    eigenvalues, _ = sym_eig(cov)
    return EmpiricalSpectrum(eigenvalues, SpectrumKind.EIGENVALUES)


def singular_spectrum(g: "CrossMatrix | np.ndarray") -> EmpiricalSpectrum:
    s, _, _ = svd(g)
    return EmpiricalSpectrum(s, SpectrumKind.SINGULAR_VALUES)

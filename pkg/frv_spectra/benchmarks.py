"""
Theoretical spectra used as benchmarks.

Marcenko-Pastur (uncorrelated Wishart), the singular-value benchmark of two
whitened uncorrelated panels, its non-whitened counterpart (MP^2), the
correlated Wishart density of a VARMA(1,1) panel and finite-T ARMA
autocovariance matrices.

Ratios follow the panel dimensions: r = N/T for a single panel, n = N/T and
m = M/T for the input and output panels of a cross-correlation.
"""

from dataclasses import dataclass
from typing import Callable, Sequence, Tuple

import numpy as np
import scipy.linalg
import scipy.optimize

from . import LOG
from .errors import ConvergenceError, NumericalError, ParameterError, StationarityError
from .frv import (
    SpectralDensity,
    TransformEvaluator,
    TransformTag,
    density_from_green,
    m_transform_stationary,
    n_transform_identity,
    poly_roots,
    poly_roots_batch,
    select_physical_root,
    spectral_grid,
    stationary_symbol,
    sweep_physical_roots,
)


@dataclass(frozen=True)
class MpParams:
    """
    Parameters of the Marcenko-Pastur law.

    Attributes:
        r (float): Rectangularity ratio N/T, positive.
        scale (float): Variance of the entries (eigenvalues scale with it).
    """

    r: float
    scale: float = 1.0

    def __post_init__(self):
        if not self.r > 0:
            raise ParameterError(f"Rectangularity ratio must be positive, got {self.r}")
        if not self.scale > 0:
            raise ParameterError(f"Marcenko-Pastur scale must be positive, got {self.scale}")

    def edges(self) -> Tuple[float, float]:
        lo, hi = mp_edges(self.r)
        return self.scale * lo, self.scale * hi


@dataclass(frozen=True)
class SvdBenchParams:
    """
    Ratios n = N/T (inputs) and m = M/T (outputs), both in (0, 1).
    """

    n: float
    m: float

    def __post_init__(self):
        for name, value in (("n", self.n), ("m", self.m)):
            if not 0 < value < 1:
                raise ParameterError(f"Ratio {name} must lie in (0, 1), got {value}")

    def squared_edges(self) -> Tuple[float, float]:
        """Edges s_-, s_+ of the band of squared singular values."""
        n, m = self.n, self.m
        centre = n + m - 2 * m * n
        half = 2 * np.sqrt(m * n * (1 - n) * (1 - m))
        return max(0.0, centre - half), centre + half

    def edges(self) -> Tuple[float, float]:
        """Edges of the continuous band of singular values."""
        lo, hi = self.squared_edges()
        return float(np.sqrt(lo)), float(np.sqrt(hi))

    def atoms(self) -> Tuple[Tuple[float, float], ...]:
        atoms = [(0.0, 1.0 - min(self.n, self.m))]
        if self.n + self.m > 1:
            atoms.append((1.0, self.n + self.m - 1.0))
        return tuple(atoms)


@dataclass(frozen=True)
class ArmaParams:
    """
    Shock coefficients of a stationary ARMA(q1, q2) process
    Y_t = sum_b b_b Y_{t-b} + sum_a a_a eps_{t-a}.

    Attributes:
        a (tuple[float, ...]): MA side a_0 ... a_q2, with a_0 > 0.
        b (tuple[float, ...]): AR side b_1 ... b_q1.
    """

    a: Tuple[float, ...]
    b: Tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(x) for x in self.a))
        object.__setattr__(self, "b", tuple(float(x) for x in self.b))
        if not self.a or not self.a[0] > 0:
            raise ParameterError(f"MA coefficients need a_0 > 0, got {self.a}")
        self.check_stationary()

    @classmethod
    def varma11(cls, a0: float, a1: float, b1: float) -> "ArmaParams":
        return cls((a0, a1), (b1,))

    @property
    def q1(self) -> int:
        return len(self.b)

    @property
    def q2(self) -> int:
        return len(self.a) - 1

    def check_stationary(self):
        """
        Raises:
            StationarityError: If 1 - sum b_k x^k has a root on or inside the
                unit circle.
        """
        if not any(self.b):
            return
        roots = poly_roots([1.0] + [-x for x in self.b])
        if np.any(np.abs(roots) <= 1.0 + 1e-12):
            raise StationarityError(
                f"AR coefficients {self.b} are not stationary (root modulus"
                f" {np.min(np.abs(roots)):.6g} <= 1)"
            )

    def first_moment(self) -> float:
        """Mean of the Fourier symbol f, i.e. the variance of the process."""
        nodes = 1 << 14
        omega = 2 * np.pi * np.arange(nodes) / nodes
        return float(np.mean(stationary_symbol(self.a, self.b, omega)))

    def symbol_range(self) -> Tuple[float, float]:
        nodes = 1 << 14
        f = stationary_symbol(self.a, self.b, 2 * np.pi * np.arange(nodes + 1) / (2 * nodes))
        return float(f.min()), float(f.max())


def mp_edges(r: float) -> Tuple[float, float]:
    """Edges (1 - sqrt(r))^2 and (1 + sqrt(r))^2 of the Marcenko-Pastur band."""
    if not r > 0:
        raise ParameterError(f"Rectangularity ratio must be positive, got {r}")
    root = np.sqrt(r)
    return float((1 - root) ** 2), float((1 + root) ** 2)


def mp_density(lam: "float | np.ndarray", r: float, scale: float = 1.0) -> "float | np.ndarray":
    """
    Continuous part of the Marcenko-Pastur density,
    sqrt((l+ - l)(l - l-)) / (2 pi r scale l) on [l-, l+], zero elsewhere.

    For r > 1 the continuous part carries mass 1/r; the remaining 1 - 1/r
    sits at zero (see `mp_spectral_density`).
    """
    lo, hi = MpParams(r, scale).edges()
    x = np.asarray(lam, dtype=np.float64)
    inside = (x > max(lo, 0.0)) & (x < hi)
    radicand = np.where(inside, (hi - x) * (x - lo), 0.0)
    safe = np.where(inside, x, 1.0)
    rho = np.where(inside, np.sqrt(radicand) / (2 * np.pi * r * scale * safe), 0.0)
    return float(rho) if np.ndim(lam) == 0 else rho


def mp_green(z: "complex | np.ndarray", r: float, scale: float = 1.0):
    """
    Green's function of the Marcenko-Pastur law,
    G(z) = (z + r - 1 - z sqrt(1 - l-/z) sqrt(1 - l+/z)) / (2 r z), in units
    of `scale`. Analytic off the band, G ~ 1/z at infinity; for r > 1 it has
    the pole (1 - 1/r)/z.
    """
    lo, hi = mp_edges(r)
    x = np.asarray(z, dtype=np.complex128) / scale
    root = x * np.sqrt(1 - lo / x) * np.sqrt(1 - hi / x)
    g = (x + r - 1 - root) / (2 * r * x) / scale
    return complex(g) if np.ndim(z) == 0 else g


def mp_n_transform(w: "complex | np.ndarray", r: float, scale: float = 1.0):
    """N-transform (1 + w)(1 + r w)/w of the Marcenko-Pastur law."""
    return scale * (1 + w) * (1 + r * w) / w


def mp_spectral_density(
    r: float,
    grid: Sequence[float] | None = None,
    grid_points: int = 2048,
    scale: float = 1.0,
) -> SpectralDensity:
    """
    The full Marcenko-Pastur density on a grid (band edges by default),
    including the atom 1 - 1/r at zero when r > 1.
    """
    lo, hi = MpParams(r, scale).edges()
    lambdas = spectral_grid(lo, hi, grid_points) if grid is None else np.asarray(grid)
    atoms = ((0.0, 1.0 - 1.0 / r),) if r > 1 else ()
    return SpectralDensity(lambdas, mp_density(lambdas, r, scale), atoms)


def svd_benchmark_density(
    params: SvdBenchParams, grid: Sequence[float] | None = None, grid_points: int = 2048
) -> SpectralDensity:
    """
    Singular-value density of G = Y_hat X_hat^T for whitened, mutually
    uncorrelated panels.

    The continuous part is sqrt((s^2 - s_-)(s_+ - s^2)) / (pi s (1 - s^2)) with
    s_+- = n + m - 2mn +- 2 sqrt(mn(1-n)(1-m)); atoms sit at 0 with weight
    1 - min(n, m) and, when n + m > 1, at 1 with weight n + m - 1. Masses
    refer to the T eigenvalues of the T x T product of projectors.

    Args:
        params (SvdBenchParams): Ratios n and m.
        grid (Sequence[float] | None): Singular-value grid; the band by default.
        grid_points (int): Size of the default grid.

    Returns:
        SpectralDensity: Density in the singular-value variable.
    """
    s_lo, s_hi = params.squared_edges()
    if grid is None:
        lo, hi = params.edges()
        s = spectral_grid(lo, hi, grid_points)
    else:
        s = np.asarray(grid, dtype=np.float64)

    w = s**2
    inside = (w >= s_lo) & (w <= s_hi) & (s > 0) & (w < 1)
    radicand = np.clip((w - s_lo) * (s_hi - w), 0.0, None)
    safe = np.where(inside, s * (1 - w), 1.0)
    rho = np.where(inside, np.sqrt(radicand) / (np.pi * safe), 0.0)
    if s_lo == 0:
        rho = np.where(s == 0, np.sqrt(s_hi) / np.pi, rho)

    return SpectralDensity(s, rho, params.atoms())


def _mp2_roots_to_density(
    s: np.ndarray, roots: np.ndarray, w: np.ndarray, atom: float
) -> np.ndarray:
    """Select the physical branch and return rho_s(s) = 2 s rho_w(s^2)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        greens = (1 + roots) / w[:, None]
    chosen = sweep_physical_roots(greens, w, tag=TransformTag.GREEN)
    m = chosen * w - 1
    # continuous part only: (1 + M - atom)/w avoids cancelling the pole numerically
    g_cont = (1 + m - atom) / w
    rho_w = np.clip(-g_cont.imag / np.pi, 0.0, None)
    return np.where(s > 0, 2 * s * rho_w, 0.0)


def _mp2_support_grid(params: SvdBenchParams, grid_points: int, solver) -> np.ndarray:
    """Grid [0, upper edge] found from a coarse pass over the norm bound."""
    bound = (1 + np.sqrt(params.n)) * (1 + np.sqrt(params.m))
    coarse = spectral_grid(0.0, bound, 512)
    rho = solver(coarse)
    positive = np.flatnonzero(rho > 1e-8 * rho.max())
    hi = coarse[min(positive[-1] + 1, coarse.size - 1)] if positive.size else bound
    return spectral_grid(0.0, float(hi), grid_points)


def mp2_density(
    params: SvdBenchParams,
    grid: Sequence[float] | None = None,
    grid_points: int = 2048,
    epsilon: float = 1e-14,
) -> SpectralDensity:
    """
    Singular-value density of G = Y X^T / T for raw (non-whitened) independent
    white-noise panels.

    With w = s^2 and G_D = (1 + M)/w, M solves the cubic
    (1 + M)(n + M)(m + M) = w M, obtained from the N-transform
    (1 + w)(n + w)(m + w)/w of the T x T product of two dual Wishart
    matrices. The zero atom carries 1 - min(n, m).

    Args:
        params (SvdBenchParams): Ratios n and m.
        grid (Sequence[float] | None): Singular-value grid; [0, upper edge]
            by default.
        grid_points (int): Size of the default grid.
        epsilon (float): Imaginary offset of w.

    Returns:
        SpectralDensity: Density in the singular-value variable.

    Raises:
        BranchSelectionError: If no physical root is found.
    """
    n, m = params.n, params.m
    atom = 1.0 - min(n, m)

    def solve(s: np.ndarray) -> np.ndarray:
        w = s**2 + 1j * epsilon
        coefficients = np.empty((s.size, 4), dtype=np.complex128)
        coefficients[:, 0] = n * m
        coefficients[:, 1] = n + m + n * m - w
        coefficients[:, 2] = 1 + n + m
        coefficients[:, 3] = 1
        return _mp2_roots_to_density(s, poly_roots_batch(coefficients), w, atom)

    s = _mp2_support_grid(params, grid_points, solve) if grid is None else np.asarray(grid)
    return SpectralDensity(s, solve(s), ((0.0, atom),))


def _cardano(p: np.ndarray, q: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Roots of the monic cubic x^3 + p x^2 + q x + c (complex, elementwise)."""
    shift = p / 3
    depressed_p = q - p**2 / 3
    depressed_q = 2 * p**3 / 27 - p * q / 3 + c
    disc = np.sqrt(depressed_q**2 / 4 + depressed_p**3 / 27)
    u3 = -depressed_q / 2 + disc
    u3 = np.where(np.abs(u3) < 1e-300, -depressed_q / 2 - disc, u3)
    u = u3 ** (1 / 3)
    omega = np.exp(2j * np.pi / 3)
    roots = []
    for k in range(3):
        uk = u * omega**k
        with np.errstate(divide="ignore", invalid="ignore"):
            tk = np.where(np.abs(uk) > 0, uk - depressed_p / (3 * uk), 0.0)
        roots.append(tk - shift)
    return np.stack(roots, axis=-1)


def mp2_density_cardano(
    params: SvdBenchParams, grid: Sequence[float], epsilon: float = 1e-14
) -> SpectralDensity:
    """
    The MP^2 density from the closed-form (Cardano) roots of its cubic; a
    cross-check of `mp2_density` on the same grid.
    """
    n, m = params.n, params.m
    atom = 1.0 - min(n, m)
    s = np.asarray(grid, dtype=np.float64)
    w = s**2 + 1j * epsilon
    roots = _cardano(
        np.full(s.shape, 1 + n + m, dtype=np.complex128), n + m + n * m - w, n * m + 0 * w
    )
    return SpectralDensity(s, _mp2_roots_to_density(s, roots, w, atom), ((0.0, atom),))


def vma_autocov(a: Sequence[float], size: int) -> np.ndarray:
    """
    Autocovariance matrix of a moving average with coefficients a_0 ... a_q:
    Toeplitz with entries sum_k a_k a_{k+|i-j|}, zero beyond lag q.
    """
    if size < 1:
        raise ParameterError(f"Matrix size must be at least 1, got {size}")
    a = np.asarray(a, dtype=np.float64)
    column = np.zeros(size)
    for lag in range(min(a.size, size)):
        column[lag] = np.dot(a[: a.size - lag], a[lag:])
    return scipy.linalg.toeplitz(column)


def var_autocov(b: Sequence[float], a0: float, size: int) -> np.ndarray:
    """
    Autocovariance matrix of an autoregression, the inverse of the moving
    average matrix with coefficients (1/a0, -b_1/a0, ..., -b_q/a0).

    Raises:
        StationarityError: If the mapped Toeplitz matrix is singular.
    """
    mapped = vma_autocov([1.0 / a0] + [-x / a0 for x in b], size)
    if np.linalg.cond(mapped) > 1e12:
        raise StationarityError(f"AR coefficients {tuple(b)} give a singular autocovariance")
    return scipy.linalg.inv(mapped)


def varma_autocov(params: ArmaParams, size: int) -> np.ndarray:
    """
    Autocovariance matrix (A4)^-1 A1 of an ARMA process, with A1 the moving
    average matrix of `a` and A4 that of (1, -b_1, ..., -b_q).
    """
    a1 = vma_autocov(params.a, size)
    if not params.b:
        return a1
    a4 = vma_autocov([1.0] + [-x for x in params.b], size)
    return scipy.linalg.solve(a4, a1, assume_a="pos")


def varma_autocov_spectrum(params: ArmaParams, size: int) -> np.ndarray:
    """Eigenvalues (ascending) of `varma_autocov`, as the pencil A1 v = l A4 v."""
    a1 = vma_autocov(params.a, size)
    a4 = vma_autocov([1.0] + [-x for x in params.b], size)
    return scipy.linalg.eigh(a1, a4, eigvals_only=True)


def _check_varma11(a0: float, b1: float):
    if not a0 > 0:
        raise ParameterError(f"a0 must be positive, got {a0}")
    if not abs(b1) < 1:
        raise StationarityError(f"|b1| must be below 1 for stationarity, got {b1}")


def varma11_m_transform(z: "complex | np.ndarray", a0: float, a1: float, b1: float):
    """
    Closed-form M-transform of the VARMA(1,1) autocovariance matrix:

        M(z) = [-a0 a1 + z K / ((1 - b1^2) R(z))] / (a0 a1 + b1 z)

    with K = a0 a1 + (a0^2 + a1^2) b1 + a0 a1 b1^2 and
    R(z) = z sqrt(1 - e1/z) sqrt(1 - e2/z), e1 = (a0 + a1)^2/(1 - b1)^2,
    e2 = (a0 - a1)^2/(1 + b1)^2. Principal roots make M analytic off
    [min e, max e] and M ~ first moment / z at infinity.
    """
    _check_varma11(a0, b1)
    x = np.asarray(z, dtype=np.complex128)
    if a1 == 0 and b1 == 0:
        result = a0**2 / (x - a0**2)
    else:
        e1 = (a0 + a1) ** 2 / (1 - b1) ** 2
        e2 = (a0 - a1) ** 2 / (1 + b1) ** 2
        k = a0 * a1 + (a0**2 + a1**2) * b1 + a0 * a1 * b1**2
        root = x * np.sqrt(1 - e1 / x) * np.sqrt(1 - e2 / x)
        result = (-a0 * a1 + x * k / ((1 - b1**2) * root)) / (a0 * a1 + b1 * x)
    return complex(result) if np.ndim(z) == 0 else result


def _polymul(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Row-wise product of batched polynomials (ascending coefficients)."""
    out = np.zeros((p.shape[0], p.shape[1] + q.shape[1] - 1), dtype=np.complex128)
    for i in range(p.shape[1]):
        for j in range(q.shape[1]):
            out[:, i + j] += p[:, i] * q[:, j]
    return out


def varma11_polynomial(z: np.ndarray, a0: float, a1: float, b1: float, r: float) -> np.ndarray:
    """
    Coefficients (ascending in M, one row per z) of the polynomial whose roots
    contain the M-transform of the Pearson estimator of a VARMA(1,1) panel.

    With u = r(1 + M), the master equation r M = M_A(z/u) is rationalized into
    Q^2 P1 P2 - z^2 K^2 u^2 = 0 where Q = (a0 a1 u + b1 z) r M + a0 a1 u,
    P1 = (1 - b1)^2 z - (a0 + a1)^2 u and P2 = (1 + b1)^2 z - (a0 - a1)^2 u.
    For a1 = b1 = 0 this vanishes and the scaled Marcenko-Pastur quadratic
    -a0^2 r M^2 + (z - a0^2 (1 + r)) M - a0^2 = 0 is returned instead.
    """
    z = np.asarray(z, dtype=np.complex128)
    ones = np.ones_like(z)
    if a1 == 0 and b1 == 0:
        return np.stack([-(a0**2) * ones, z - a0**2 * (1 + r), -(a0**2) * r * ones], axis=1)

    a01 = a0 * a1
    k = a01 + (a0**2 + a1**2) * b1 + a01 * b1**2
    s1, s2 = (a0 + a1) ** 2, (a0 - a1) ** 2

    q = np.stack([a01 * r * ones, a01 * r + r * (a01 * r + b1 * z), a01 * r**2 * ones], axis=1)
    p1 = np.stack([(1 - b1) ** 2 * z - s1 * r, -s1 * r * ones], axis=1)
    p2 = np.stack([(1 + b1) ** 2 * z - s2 * r, -s2 * r * ones], axis=1)

    poly = _polymul(_polymul(_polymul(q, q), p1), p2)
    u2 = (z**2 * k**2 * r**2)[:, None] * np.array([1.0, 2.0, 1.0])
    poly[:, :3] -= u2
    return poly


def _trim_columns(coefficients: np.ndarray) -> np.ndarray:
    """Drop leading-degree columns that vanish on every row."""
    scale = np.max(np.abs(coefficients))
    size = coefficients.shape[1]
    while size > 2 and np.all(np.abs(coefficients[:, size - 1]) <= 1e-14 * scale):
        size -= 1
    return coefficients[:, :size]


# Companion-matrix roots carry imaginary noise far above 1e-10 relative near z = 0
ROOT_TOL = 1e-7
# Above this hi / lo the default grid gets a geometric share near the lower edge
WIDE_SPAN = 1e3


def _edge_refined_grid(lo: float, hi: float, points: int) -> np.ndarray:
    """
    `spectral_grid` on [lo, hi]; when hi / lo exceeds WIDE_SPAN a quarter of
    the points are spread geometrically instead, so a pile-up of eigenvalues
    just above a tiny lower edge stays resolved.
    """
    if lo <= 0 or hi / lo <= WIDE_SPAN:
        return spectral_grid(lo, hi, points)
    geometric = np.geomspace(lo, hi, max(2, points // 4))
    return np.unique(np.concatenate([spectral_grid(lo, hi, points - geometric.size), geometric]))


def varma11_density(
    a0: float,
    a1: float,
    b1: float,
    r: float,
    grid: Sequence[float] | None = None,
    grid_points: int = 2048,
    epsilon: float = 1e-14,
) -> SpectralDensity:
    """
    Eigenvalue density of the Pearson estimator of an N x T panel whose rows
    are independent VARMA(1,1) processes with shocks (a0, a1) and AR
    coefficient b1.

    Roots of `varma11_polynomial` are kept when they solve the unsquared
    master equation; the physical one is selected by a sweep along the grid
    and rho = -Im((1 + M)/z)/pi.

    Args:
        a0, a1, b1 (float): Shock and AR coefficients (a0 > 0, |b1| < 1).
        r (float): Rectangularity ratio N/T in (0, 1).
        grid (Sequence[float] | None): Eigenvalue grid. By default
            [min e (1 - sqrt r)^2, max e (1 + sqrt r)^2], e the symbol extremes.
        grid_points (int): Size of the default grid.
        epsilon (float): Imaginary offset of z.

    Returns:
        SpectralDensity: The density, without atoms.

    Raises:
        StationarityError: If |b1| >= 1.
        BranchSelectionError: If no physical root is found.
    """
    _check_varma11(a0, b1)
    if not 0 < r < 1:
        raise ParameterError(f"Rectangularity ratio must lie in (0, 1), got {r}")

    if grid is None:
        e1 = (a0 + a1) ** 2 / (1 - b1) ** 2
        e2 = (a0 - a1) ** 2 / (1 + b1) ** 2
        lo, hi = mp_edges(r)
        lambdas = _edge_refined_grid(min(e1, e2) * lo, max(e1, e2) * hi, grid_points)
    else:
        lambdas = np.asarray(grid, dtype=np.float64)

    z = lambdas + 1j * epsilon
    roots = poly_roots_batch(_trim_columns(varma11_polynomial(z, a0, a1, b1, r)))

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        x = z[:, None] / (r * (1 + roots))
        residual = r * roots - varma11_m_transform(x, a0, a1, b1)
        admissible = np.isfinite(residual) & (
            np.abs(residual) <= 1e-6 * np.maximum(1.0, np.abs(r * roots))
        )

    m = sweep_physical_roots(roots, z, admissible, TransformTag.M_TRANSFORM, tol=ROOT_TOL)
    rho = np.clip(-((1 + m) / z).imag / np.pi, 0.0, None)
    return SpectralDensity(lambdas, rho)


def master_equation_z(
    m: complex,
    r: float,
    n_a: Callable[[complex], complex],
    n_c: Callable[[complex], complex] = n_transform_identity,
) -> complex:
    """
    z = r M N_A(r M) N_C(M): the point at which the Pearson estimator of a
    panel with temporal autocovariance A and cross-covariance C has
    M-transform M.
    """
    return r * m * n_a(r * m) * n_c(m)


def stationary_density(
    params: ArmaParams,
    r: float,
    grid: Sequence[float] | None = None,
    grid_points: int = 512,
    epsilon: float | None = None,
) -> SpectralDensity:
    """
    Eigenvalue density of the Pearson estimator for any stationary ARMA
    autocovariance, from the master equation r M = M_A(z / (r (1 + M))) with
    the quadrature M-transform.

    Solved by secant continuation from the upper end of the grid, seeded with
    the variance-matched Marcenko-Pastur value. The imaginary offset
    broadens the density by a Lorentzian of width epsilon.

    Args:
        params (ArmaParams): Stationary shock coefficients.
        r (float): Rectangularity ratio N/T in (0, 1).
        grid (Sequence[float] | None): Eigenvalue grid; the symbol range
            widened by the Marcenko-Pastur edges by default.
        grid_points (int): Size of the default grid.
        epsilon (float | None): Imaginary offset; twice the grid spacing if None.

    Returns:
        SpectralDensity: The broadened density.

    Raises:
        NumericalError: If the continuation fails at some lambda, which the
            message names.
    """
    if not 0 < r < 1:
        raise ParameterError(f"Rectangularity ratio must lie in (0, 1), got {r}")
    if grid is None:
        f_lo, f_hi = params.symbol_range()
        lo, hi = mp_edges(r)
        lambdas = np.linspace(f_lo * lo, f_hi * hi, grid_points)
    else:
        lambdas = np.asarray(grid, dtype=np.float64)
    if epsilon is None:
        epsilon = 2.0 * float(np.mean(np.diff(lambdas)))

    variance = params.first_moment()

    def equation(m: complex, z: complex) -> complex:
        return r * m - m_transform_stationary(params, z / (r * (1 + m)))

    def continuation(zs: np.ndarray) -> np.ndarray:
        zs = np.atleast_1d(zs)
        m_values = np.empty(zs.size, dtype=np.complex128)
        previous = None
        for k in np.argsort(zs.real)[::-1]:
            z = complex(zs[k])
            seeds = [z * mp_green(z, r, variance) - 1]
            if previous is not None:
                seeds.insert(0, previous)
            for seed in seeds:
                try:
                    m = complex(
                        scipy.optimize.newton(
                            equation, seed, x1=seed * (1 + 1e-4) - 1e-6j, args=(z,), tol=1e-12
                        )
                    )
                except (RuntimeError, ZeroDivisionError, NumericalError):
                    continue
                if np.isfinite(m) and m.imag <= 1e-12:
                    break
            else:
                raise ConvergenceError(
                    f"Master equation did not converge at lambda={z.real:.6g}",
                    iterations=100,
                    residual=float("nan"),
                )
            m_values[k] = previous = m
        return m_values

    m_transform = TransformEvaluator(
        continuation, TransformTag.M_TRANSFORM, "stationary ARMA", vectorized=True
    )
    density = density_from_green(m_transform, lambdas, epsilon, detect_atoms=False)
    LOG.debug(f"Stationary density on {lambdas.size} points, epsilon {epsilon:.3g}")
    return density


def select_mp_root(z: complex, r: float) -> complex:
    """
    The Marcenko-Pastur Green's function at z from the roots of
    z r G^2 - (z + r - 1) G + 1 = 0.
    """
    return select_physical_root(poly_roots([1.0, -(z + r - 1), z * r]), z)

"""
Numeric engine for free-random-variable spectra.

Holds the transform evaluators (Green's function, M-transform, N-transform),
polynomial root finding, selection of the physical Green's-function branch,
density extraction from a Green's function and the quadrature M-transform of a
stationary ARMA autocovariance.

Conventions:
    G(z) = (1/N) Tr 1/(z - H),  M(z) = z G(z) - 1,  N = M^(-1) (functional
    inverse), and the density is rho(lambda) = -Im G(lambda + i eps) / pi.
"""

from dataclasses import dataclass, field
from enum import StrEnum
from typing import TYPE_CHECKING, Callable, Iterable, Sequence, Tuple

import numpy as np
import pandas as pd
import scipy.integrate

from . import LOG
from .errors import (
    BranchSelectionError,
    ConvergenceError,
    DensityNormalizationError,
    InputError,
    NumericalError,
    ParameterError,
)

if TYPE_CHECKING:
    from .benchmarks import ArmaParams  # pragma: no cover


class TransformTag(StrEnum):
    GREEN = "green"
    M_TRANSFORM = "m-transform"
    N_TRANSFORM = "n-transform"


@dataclass(frozen=True)
class TransformEvaluator:
    """
    A complex function tagged with the transform it represents.

    Attributes:
        func (Callable): z -> value. When `vectorized` is set it must accept
            numpy arrays.
        tag (TransformTag): Which transform `func` is.
        name (str): Used in log and error messages.
        vectorized (bool): Whether `func` broadcasts over arrays.
    """

    func: Callable
    tag: TransformTag = TransformTag.GREEN
    name: str = ""
    vectorized: bool = False

    def __call__(self, z: complex) -> complex:
        return complex(self.func(z))

    def evaluate(self, zs: Iterable[complex]) -> np.ndarray:
        """Evaluate on many points, locating the offending point on failure."""
        zs = np.asarray(list(zs) if not isinstance(zs, np.ndarray) else zs, dtype=np.complex128)
        if self.vectorized:
            try:
                return np.asarray(self.func(zs), dtype=np.complex128)
            except NumericalError:
                pass
        values = np.empty(zs.shape, dtype=np.complex128)
        for k, z in enumerate(zs):
            try:
                values[k] = self.func(z)
            except NumericalError as exc:
                raise NumericalError(
                    f"{self.name or self.tag} failed at lambda={z.real:.6g}: {exc}"
                ) from exc
        return values

    def as_green(self) -> "TransformEvaluator":
        """The Green's function G = (1 + M)/z of an M-transform evaluator."""
        if self.tag == TransformTag.GREEN:
            return self
        if self.tag == TransformTag.M_TRANSFORM:
            m = self.func
            return TransformEvaluator(
                lambda z: (1.0 + m(z)) / z, TransformTag.GREEN, self.name, self.vectorized
            )
        raise InputError(f"Cannot build a Green's function from an {self.tag} evaluator")


@dataclass(frozen=True, eq=False)
class SpectralDensity:
    """
    A spectral density: a continuous part on a grid plus point masses.

    Attributes:
        lambdas (np.ndarray): Ascending grid (bin centres in histogram mode).
        rho (np.ndarray): Non-negative density values on the grid.
        atoms (tuple[tuple[float, float], ...]): (position, weight) pairs.
        edges (np.ndarray | None): Bin edges; when set, `rho` is piecewise
            constant on the bins instead of piecewise linear on the grid.
    """

    lambdas: np.ndarray
    rho: np.ndarray
    atoms: Tuple[Tuple[float, float], ...] = ()
    edges: np.ndarray | None = field(default=None)

    def __post_init__(self):
        lambdas = np.asarray(self.lambdas, dtype=np.float64)
        rho = np.asarray(self.rho, dtype=np.float64)
        if lambdas.shape != rho.shape or lambdas.ndim != 1:
            raise InputError(f"Grid and density shapes differ: {lambdas.shape} != {rho.shape}")
        if lambdas.size > 1 and np.any(np.diff(lambdas) <= 0):
            raise InputError("Density grid must be strictly ascending")
        if np.any(rho < 0):
            raise InputError(f"Density is negative (min {rho.min():.3g})")
        if self.edges is not None:
            edges = np.asarray(self.edges, dtype=np.float64)
            if edges.size != rho.size + 1:
                raise InputError(f"Expected {rho.size + 1} bin edges, got {edges.size}")
            object.__setattr__(self, "edges", edges)
        atoms = tuple(sorted((float(x), float(w)) for x, w in self.atoms))
        if any(w < 0 for _, w in atoms):
            raise InputError("Atom weights must be non-negative")
        object.__setattr__(self, "lambdas", lambdas)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "atoms", atoms)

    @property
    def atom_mass(self) -> float:
        return sum(w for _, w in self.atoms)

    def continuous_mass(self) -> float:
        if self.edges is not None:
            return float(np.sum(self.rho * np.diff(self.edges)))
        if self.lambdas.size < 2:
            return 0.0
        return float(scipy.integrate.trapezoid(self.rho, self.lambdas))

    def mass(self) -> float:
        """Total mass: continuous part plus atoms."""
        return self.continuous_mass() + self.atom_mass

    def check_normalized(self, tol: float = 1e-3) -> "SpectralDensity":
        """
        Raises:
            DensityNormalizationError: If |mass - 1| > tol.
        """
        mass = self.mass()
        if abs(mass - 1.0) > tol:
            raise DensityNormalizationError(
                f"Density mass is {mass:.6g}, expected 1 within {tol:g}"
            )
        return self

    def moment(self, k: int) -> float:
        """k-th moment of the density (continuous part by quadrature)."""
        atoms = sum(w * x**k for x, w in self.atoms)
        if self.edges is not None:
            widths = np.diff(self.edges)
            return float(np.sum(self.rho * widths * self.lambdas**k)) + atoms
        return float(scipy.integrate.trapezoid(self.rho * self.lambdas**k, self.lambdas)) + atoms

    def _continuous_cdf(self, x: np.ndarray) -> np.ndarray:
        if self.edges is not None:
            cum = np.concatenate(([0.0], np.cumsum(self.rho * np.diff(self.edges))))
            return np.interp(x, self.edges, cum, left=0.0, right=cum[-1])

        lam, rho = self.lambdas, self.rho
        if lam.size < 2:
            return np.zeros_like(x)
        cum = scipy.integrate.cumulative_trapezoid(rho, lam, initial=0.0)
        k = np.clip(np.searchsorted(lam, x, side="right") - 1, 0, lam.size - 2)
        t = np.clip(x - lam[k], 0.0, lam[k + 1] - lam[k])
        slope = (rho[k + 1] - rho[k]) / (lam[k + 1] - lam[k])
        partial = cum[k] + t * rho[k] + 0.5 * slope * t**2
        return np.where(x < lam[0], 0.0, np.where(x >= lam[-1], cum[-1], partial))

    def cdf(self, x: "float | np.ndarray") -> np.ndarray:
        """P(value <= x), atoms included at their position."""
        x = np.asarray(x, dtype=np.float64)
        result = self._continuous_cdf(np.atleast_1d(x))
        for position, weight in self.atoms:
            result = result + weight * (np.atleast_1d(x) >= position)
        return result.reshape(x.shape)

    def cdf_left(self, x: "float | np.ndarray") -> np.ndarray:
        """P(value < x)."""
        x = np.asarray(x, dtype=np.float64)
        result = self._continuous_cdf(np.atleast_1d(x))
        for position, weight in self.atoms:
            result = result + weight * (np.atleast_1d(x) > position)
        return result.reshape(x.shape)

    def support(self, tol: float = 1e-8) -> Tuple[float, float]:
        """Smallest interval holding the continuous part above `tol` and all atoms."""
        points = list(self.lambdas[self.rho > tol]) + [x for x, w in self.atoms if w > 0]
        if not points:
            return (0.0, 0.0)
        return (float(min(points)), float(max(points)))

    def renormalized_continuous(self) -> "SpectralDensity":
        """The continuous part alone, scaled to unit mass."""
        mass = self.continuous_mass()
        if mass <= 0:
            raise DensityNormalizationError("Density has no continuous part")
        return SpectralDensity(self.lambdas, self.rho / mass, (), self.edges)

    def to_frame(self, variable: str = "lambda") -> pd.DataFrame:
        return pd.DataFrame({variable: self.lambdas, "rho": self.rho})

    def atoms_json(self) -> list:
        return [{"position": x, "weight": w} for x, w in self.atoms]


@dataclass(frozen=True)
class PolyCoeffs:
    """
    Polynomial coefficients in ascending degree, trimmed so the leading
    coefficient is nonzero.
    """

    coefficients: Tuple[complex, ...]

    def __post_init__(self):
        coefficients = np.asarray(self.coefficients, dtype=np.complex128)
        scale = np.max(np.abs(coefficients), initial=0.0)
        if scale == 0:
            raise InputError("Polynomial is identically zero")
        keep = np.flatnonzero(np.abs(coefficients) > 1e-14 * scale)[-1] + 1
        object.__setattr__(self, "coefficients", tuple(complex(c) for c in coefficients[:keep]))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, z: "complex | np.ndarray"):
        return np.polynomial.polynomial.polyval(z, np.asarray(self.coefficients))


def poly_roots(p: "PolyCoeffs | Sequence[complex]") -> np.ndarray:
    """
    All roots of a polynomial, with multiplicity.

    The companion-matrix roots receive one Newton step each, kept only when it
    lowers the residual.

    Args:
        p (PolyCoeffs | Sequence[complex]): Coefficients in ascending degree.

    Returns:
        np.ndarray: `degree` complex roots.

    Raises:
        InputError: If the polynomial has degree 0.
    """
    p = p if isinstance(p, PolyCoeffs) else PolyCoeffs(tuple(p))
    if p.degree < 1:
        raise InputError(f"Cannot find roots of a degree-0 polynomial {p.coefficients}")
    return poly_roots_batch(np.asarray(p.coefficients)[None, :])[0]


def _horner(coefficients: np.ndarray, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Value and derivative of batched polynomials (rows ascending) at z (rows x roots)."""
    value = np.broadcast_to(coefficients[:, -1:], z.shape).astype(np.complex128)
    derivative = np.zeros_like(value)
    for c in coefficients[:, -2::-1].T:
        derivative = derivative * z + value
        value = value * z + c[:, None]
    return value, derivative


def poly_roots_batch(coefficients: np.ndarray) -> np.ndarray:
    """
    Roots of many polynomials of the same degree at once.

    Args:
        coefficients (np.ndarray): K x (d+1) array, each row ascending with a
            nonzero last entry.

    Returns:
        np.ndarray: K x d complex roots. Rows whose leading coefficient
        vanishes are solved at their reduced degree and padded with NaN.
    """
    coefficients = np.atleast_2d(np.asarray(coefficients, dtype=np.complex128))
    count, size = coefficients.shape
    degree = size - 1
    if degree < 1:
        raise InputError("Cannot find roots of degree-0 polynomials")

    roots = np.full((count, degree), np.nan + 0j, dtype=np.complex128)
    scale = np.max(np.abs(coefficients), axis=1)
    regular = np.abs(coefficients[:, -1]) > 1e-14 * scale

    if np.any(regular):
        c = coefficients[regular]
        companion = np.zeros((c.shape[0], degree, degree), dtype=np.complex128)
        companion[:, 1:, :-1] = np.eye(degree - 1)
        companion[:, :, -1] = -c[:, :-1] / c[:, -1:]
        found = np.linalg.eigvals(companion)

        value, derivative = _horner(c, found)
        with np.errstate(divide="ignore", invalid="ignore"):
            polished = found - value / derivative
        new_value, _ = _horner(c, np.where(np.isfinite(polished), polished, found))
        better = np.isfinite(polished) & (np.abs(new_value) < np.abs(value))
        roots[regular] = np.where(better, polished, found)

    for k in np.flatnonzero(~regular):
        if scale[k] == 0:
            continue
        reduced = PolyCoeffs(tuple(coefficients[k]))
        if reduced.degree >= 1:
            roots[k, : reduced.degree] = poly_roots(reduced)

    return roots


def select_physical_root(
    candidates: Sequence[complex],
    z: complex,
    previous: complex | None = None,
    tol: float = 1e-10,
    tag: TransformTag = TransformTag.GREEN,
) -> complex:
    """
    Pick the Green's-function branch among polynomial roots at z (Im z > 0).

    Candidates with a negative imaginary part qualify; when there are none,
    real candidates (|Im| within tolerance, the case outside the support) do.
    Among several, the one closest to `previous` wins, or without a previous
    value the one matching the large-|z| asymptote (G ~ 1/z, or M ~ 0 for an
    M-transform).

    Args:
        candidates (Sequence[complex]): Roots; NaN entries are ignored.
        z (complex): Evaluation point in the upper half-plane.
        previous (complex | None): Root chosen at the neighbouring grid point.
        tol (float): Relative tolerance for "real".
        tag (TransformTag): Whether the roots are G or M values.

    Returns:
        complex: The physical root.

    Raises:
        BranchSelectionError: If no candidate qualifies.
    """
    pool = [complex(c) for c in candidates if np.isfinite(c)]

    strict = [c for c in pool if c.imag < -tol * max(1.0, abs(c))]
    if not strict:
        strict = [c for c in pool if abs(c.imag) <= tol * max(1.0, abs(c))]
    if not strict:
        raise BranchSelectionError(z, list(candidates), "no candidate with Im <= 0")
    if len(strict) == 1:
        return strict[0]

    if previous is not None:
        return min(strict, key=lambda c: abs(c - previous))
    if tag == TransformTag.M_TRANSFORM:
        return min(strict, key=abs)
    return min(strict, key=lambda c: abs(c * z - 1.0))


def sweep_physical_roots(
    roots: np.ndarray,
    zs: np.ndarray,
    admissible: np.ndarray | None = None,
    tag: TransformTag = TransformTag.GREEN,
    tol: float = 1e-10,
) -> np.ndarray:
    """
    Select the physical root at every grid point, sweeping from the largest
    |z| inward so each choice can follow its neighbour.

    Args:
        roots (np.ndarray): K x d candidate roots per grid point.
        zs (np.ndarray): K evaluation points, ascending real parts.
        admissible (np.ndarray | None): K x d mask of candidates satisfying the
            unrationalized equation; ignored at points where it rejects all.
        tag (TransformTag): Whether the roots are G or M values.

    Returns:
        np.ndarray: K selected roots.
    """
    count = zs.size
    chosen = np.empty(count, dtype=np.complex128)
    start = int(np.argmax(np.abs(zs)))

    def pick(k: int, previous: complex | None) -> complex:
        candidates = roots[k]
        if admissible is not None and np.any(admissible[k]):
            candidates = candidates[admissible[k]]
        chosen[k] = select_physical_root(candidates, zs[k], previous, tol, tag)
        return chosen[k]

    pick(start, None)
    for path in (range(start + 1, count), range(start - 1, -1, -1)):
        previous = chosen[start]
        for k in path:
            previous = pick(k, previous)

    return chosen


def density_from_green(
    g: TransformEvaluator,
    grid: Sequence[float],
    epsilon: float | None = None,
    detect_atoms: bool = True,
) -> SpectralDensity:
    """
    Extract rho(lambda) = -Im G(lambda + i eps) / pi on a grid.

    Point masses show up as Lorentzian peaks of height weight / (pi eps).
    Grid points where eps |Im G| > 0.1 are treated as atoms: each peak is
    fitted by a Lorentzian, recorded as an atom and removed from the
    continuous part.

    Args:
        g (TransformEvaluator): Green's function (or M-transform) evaluator.
        grid (Sequence[float]): Ascending real grid.
        epsilon (float | None): Imaginary offset; 10 x the grid spacing if None.
        detect_atoms (bool): Whether to look for point masses.

    Returns:
        SpectralDensity: The density on the grid.

    Raises:
        InputError: If the grid is not ascending or epsilon is not positive.
        NumericalError: If the evaluator fails (the offending lambda is named)
            or returns a clearly negative density.
    """
    lambdas = np.asarray(grid, dtype=np.float64)
    if lambdas.size < 2 or np.any(np.diff(lambdas) <= 0):
        raise InputError("Density grid must be ascending with at least 2 points")
    if epsilon is None:
        epsilon = 10.0 * float(np.mean(np.diff(lambdas)))
    if epsilon <= 0:
        raise InputError(f"Imaginary offset must be positive, got {epsilon}")

    green = g.as_green().evaluate(lambdas + 1j * epsilon)
    rho = -green.imag / np.pi

    atoms = []
    if detect_atoms:
        strength = -epsilon * green.imag
        peaks = [
            k
            for k in range(lambdas.size)
            if strength[k] > 0.1
            and (k == 0 or strength[k] >= strength[k - 1])
            and (k == lambdas.size - 1 or strength[k] > strength[k + 1])
        ]
        for k in peaks:
            position, weight = lambdas[k], strength[k]
            if 0 < k < lambdas.size - 1:
                window = slice(k - 1, k + 2)
                # 1/strength is a parabola with leading coefficient 1/(weight eps^2)
                a, b, _ = np.polyfit(lambdas[window], 1.0 / strength[window], 2)
                if a > 0:
                    position, weight = -b / (2 * a), 1.0 / (a * epsilon**2)
            rho = rho - weight * epsilon / np.pi / ((lambdas - position) ** 2 + epsilon**2)
            atoms.append((float(position), float(weight)))
            LOG.debug(f"Atom at {position:.6g} with weight {weight:.6g}")

    if np.min(rho) < -1e-9 * max(1.0, float(np.max(np.abs(rho)))) and not atoms:
        k = int(np.argmin(rho))
        raise NumericalError(
            f"{g.name or 'Green function'} gives negative density {rho[k]:.3g}"
            f" at lambda={lambdas[k]:.6g}"
        )
    return SpectralDensity(lambdas, np.clip(rho, 0.0, None), tuple(atoms))


def m_transform_identity(z: complex) -> complex:
    """M-transform 1/(z - 1) of the identity matrix; N(w) = 1 + 1/w."""
    if z == 1:
        raise ParameterError("The identity M-transform has a pole at z=1")
    return 1.0 / (z - 1.0)


def n_transform_identity(w: complex) -> complex:
    return 1.0 + 1.0 / w


def stationary_symbol(a: Sequence[float], b: Sequence[float], omega: np.ndarray) -> np.ndarray:
    """
    f(omega) = |sum_k a_k e^{i k omega}|^2 / |1 - sum_k b_k e^{i k omega}|^2,
    the Fourier symbol of an ARMA autocovariance (a_0 first, b_1 first).
    """
    phase = np.exp(1j * omega)
    numerator = np.polynomial.polynomial.polyval(phase, np.asarray(a, dtype=np.float64))
    denominator = np.polynomial.polynomial.polyval(
        phase, np.concatenate(([1.0], -np.asarray(b, dtype=np.float64)))
    )
    return np.abs(numerator) ** 2 / np.abs(denominator) ** 2


def m_transform_stationary(
    params: "ArmaParams",
    z: "complex | np.ndarray",
    quad_points: int = 512,
    rtol: float = 1e-10,
    max_points: int = 1 << 21,
) -> "complex | np.ndarray":
    """
    M-transform of the autocovariance of a stationary ARMA process.

    M(z) = (1/2pi) int f(w) / (z - f(w)) dw over [-pi, pi], by the uniform
    trapezoid rule; the node count doubles until two successive estimates
    agree to `rtol`.

    Args:
        params (ArmaParams): Stationary ARMA coefficients.
        z (complex | np.ndarray): Evaluation point(s) off the spectrum of f.
        quad_points (int): Initial number of nodes (at least 512).
        rtol (float): Relative agreement required between refinements.
        max_points (int): Largest node count tried.

    Returns:
        complex | np.ndarray: M(z), with the shape of z.

    Raises:
        StationarityError: If the parameters are not stationary.
        ConvergenceError: If refinements still disagree by more than 1e-6.
    """
    params.check_stationary()
    scalar = np.ndim(z) == 0
    zs = np.atleast_1d(np.asarray(z, dtype=np.complex128))[:, None]

    nodes = max(512, int(quad_points))
    f = stationary_symbol(params.a, params.b, 2.0 * np.pi * np.arange(nodes) / nodes)
    estimate = np.mean(f / (zs - f), axis=1)

    while True:
        odd = stationary_symbol(params.a, params.b, 2.0 * np.pi * (np.arange(nodes) + 0.5) / nodes)
        refined = 0.5 * (estimate + np.mean(odd / (zs - odd), axis=1))
        nodes *= 2
        gap = np.max(np.abs(refined - estimate) / np.maximum(1.0, np.abs(refined)))
        estimate = refined
        if gap <= rtol:
            break
        if nodes >= max_points:
            if gap > 1e-6:
                raise ConvergenceError(
                    "Quadrature M-transform did not converge", iterations=nodes, residual=gap
                )
            LOG.debug(f"Quadrature M-transform stopped at {nodes} nodes, gap {gap:.3g}")
            break

    return complex(estimate[0]) if scalar else estimate


def n_transform_numeric(
    m: "TransformEvaluator | Callable[[complex], complex]",
    w: complex,
    seed_guess: complex,
    tol: float = 1e-12,
    max_iter: int = 200,
) -> complex:
    """
    Invert an M-transform numerically: find z with M(z) = w.

    Uses secant steps, halved while they fail to reduce the residual.

    Args:
        m (TransformEvaluator | Callable): The M-transform.
        w (complex): Target value.
        seed_guess (complex): Starting point near the sought z.
        tol (float): Relative residual at which to stop.
        max_iter (int): Iteration cap.

    Returns:
        complex: z with |M(z) - w| <= 1e-10 max(1, |w|).

    Raises:
        ConvergenceError: If the residual target is not met in `max_iter` steps.
    """
    scale = max(1.0, abs(w))

    def residual(z: complex) -> complex:
        return complex(m(z)) - w

    z0 = complex(seed_guess)
    z1 = z0 + 1e-3 * max(1.0, abs(z0)) * (1 + 1j)
    f0, f1 = residual(z0), residual(z1)
    if abs(f0) < abs(f1):
        z0, z1, f0, f1 = z1, z0, f1, f0

    for iteration in range(max_iter):
        if abs(f1) <= tol * scale:
            return z1
        denominator = f1 - f0
        if denominator == 0:
            step = 1e-6 * max(1.0, abs(z1))
        else:
            step = f1 * (z1 - z0) / denominator

        damping = 1.0
        while True:
            z_new = z1 - damping * step
            try:
                f_new = residual(z_new)
            except (ZeroDivisionError, ParameterError, NumericalError):
                f_new = complex(np.inf)
            if np.isfinite(f_new) and abs(f_new) < abs(f1) or damping < 1e-6:
                break
            damping *= 0.5

        if not np.isfinite(f_new):
            break
        if abs(z_new - z1) <= 1e-15 * max(1.0, abs(z1)):
            z0, f0, z1, f1 = z1, f1, z_new, f_new
            break
        z0, f0, z1, f1 = z1, f1, z_new, f_new

    if abs(f1) <= 1e-10 * scale:
        return z1
    raise ConvergenceError(
        f"N-transform inversion at w={w:.6g} did not converge",
        iterations=max_iter,
        residual=abs(f1),
    )


def projector_n_transform(fraction: float) -> TransformEvaluator:
    """
    N-transform (fraction + w)/w of a projector with `fraction` of its
    eigenvalues equal to 1 (M(z) = fraction/(z - 1)).
    """
    if not 0 < fraction <= 1:
        raise ParameterError(f"Projector fraction must lie in (0, 1], got {fraction}")
    return TransformEvaluator(
        lambda w: (fraction + w) / w, TransformTag.N_TRANSFORM, f"projector({fraction:g})", True
    )


def compose_n_transforms(n_a: TransformEvaluator, n_b: TransformEvaluator) -> TransformEvaluator:
    """
    N-transform of the product of two free matrices:
    N_AB(w) = N_A(w) N_B(w) w / (1 + w).
    """
    for n in (n_a, n_b):
        if n.tag != TransformTag.N_TRANSFORM:
            raise InputError(f"Expected N-transforms, got {n.tag}")
    return TransformEvaluator(
        lambda w: n_a.func(w) * n_b.func(w) * w / (1.0 + w),
        TransformTag.N_TRANSFORM,
        f"{n_a.name}*{n_b.name}",
        n_a.vectorized and n_b.vectorized,
    )


def spectral_grid(lo: float, hi: float, points: int) -> np.ndarray:
    """
    Ascending grid on [lo, hi] clustered towards both ends, where densities
    have square-root (or inverse square-root) edges.
    """
    if points < 2 or not hi > lo:
        raise InputError(f"Cannot build a grid of {points} points on [{lo}, {hi}]")
    t = np.linspace(0.0, np.pi, points)
    grid = lo + (hi - lo) * 0.5 * (1.0 - np.cos(t))
    grid[0], grid[-1] = lo, hi
    return grid

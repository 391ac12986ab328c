"""Unsharp energy measurements: kernels, POVM operators, outcome statistics.

A meter with kernel ``g`` reports an outcome ``f`` for an eigenvalue ``a``
with density ``g(f - a)``. The square-root POVM element is
``sum_i sqrt(g(f - mu_i)) Pi_i`` over the eigenvalue groups of the
measured observable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import ImpossibleOutcome, NonCommutingState
from .qcore import DensityMatrix, Observable, _square
from .quadrature import integrate_pieces
from .rng import TrialStream

BOX = "box"
GAUSSIAN = "gaussian"
GAUSSIAN_CUTOFF = 8.0
DOMINANCE_RATIO = 1e-12
OUTCOME_FLOOR = 1e-300

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class MeasurementKernel:
    """Outcome density centred at zero.

    ``shape`` is ``"box"`` (uniform on [-sigma/2, sigma/2)) or
    ``"gaussian"`` (standard deviation ``sigma``, cut at +-8 sigma).
    ``mass`` scales the density and is 1 for every physical kernel; other
    values exist only to exercise the completeness checks.
    """

    shape: str
    sigma: float
    mass: float = 1.0

    def __post_init__(self):
        if self.shape not in (BOX, GAUSSIAN):
            raise ValueError(f"unknown kernel shape {self.shape!r}")
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValueError(f"kernel width must be positive, got {self.sigma!r}")

    @classmethod
    def box(cls, sigma: float) -> MeasurementKernel:
        return cls(BOX, float(sigma))

    @classmethod
    def gaussian(cls, sigma: float) -> MeasurementKernel:
        return cls(GAUSSIAN, float(sigma))

    @property
    def half_width(self) -> float:
        if self.shape == BOX:
            return 0.5 * self.sigma
        return GAUSSIAN_CUTOFF * self.sigma

    @property
    def support(self) -> tuple[float, float]:
        return (-self.half_width, self.half_width)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        if self.shape == BOX:
            inside = (x >= -0.5 * self.sigma) & (x < 0.5 * self.sigma)
            out = np.where(inside, self.mass / self.sigma, 0.0)
        else:
            z = x / self.sigma
            out = np.where(
                np.abs(z) <= GAUSSIAN_CUTOFF, self.mass * np.exp(-0.5 * z * z) / (self.sigma * _SQRT_2PI), 0.0
            )
        return out if out.ndim else float(out)

    def ppf(self, u):
        """Inverse CDF of the (normalised, truncated) kernel for u in (0, 1)."""
        u = np.asarray(u, dtype=float)
        if self.shape == BOX:
            return self.sigma * (u - 0.5)
        lo = ndtr(-GAUSSIAN_CUTOFF)
        width = 1.0 - 2.0 * lo
        # mirror the upper half so both tails keep full resolution
        lower = u <= 0.5
        z = ndtri(lo + np.where(lower, u, 1.0 - u) * width)
        return self.sigma * np.where(lower, z, -z)


def kernel_density(k: MeasurementKernel, f):
    return k.density(f)


def meter_factor(k: MeasurementKernel, beta: float) -> float:
    """Kernel transform at imaginary argument, integral of g(f) e^{beta f}.

    Box: (2/(beta sigma)) sinh(beta sigma/2). Gaussian: exp(beta^2 sigma^2/2)
    times the mass the tilted normal keeps inside the +-8 sigma cut, which
    is what the truncated kernel actually integrates to.
    """
    if beta < 0:
        raise ValueError("beta must be non-negative")
    x = beta * k.sigma
    if k.shape == BOX:
        if x == 0.0:
            return k.mass
        return k.mass * 2.0 * math.sinh(0.5 * x) / x
    kept = ndtr(GAUSSIAN_CUTOFF - x) - ndtr(-GAUSSIAN_CUTOFF - x)
    return k.mass * math.exp(0.5 * x * x) * float(kept)


def meter_factor_quadrature(k: MeasurementKernel, beta: float) -> float:
    lo, hi = k.support
    val, _ = integrate_pieces(lambda x: k.density(x) * math.exp(beta * x), [lo, 0.0, hi], epsrel=1e-12)
    return val


def partial_meter_factor(k: MeasurementKernel, beta: float, interval, mu: float) -> float:
    """Integral of g(f - mu) e^{beta (f - mu)} over ``interval`` = (a, b)."""
    a, b = (float(v) for v in interval)
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("interval must be finite")
    lo, hi = mu + k.support[0], mu + k.support[1]
    a, b = max(a, lo), min(b, hi)
    if b <= a:
        return 0.0
    val, _ = integrate_pieces(lambda f: k.density(f - mu) * math.exp(beta * (f - mu)), [a, b], epsrel=1e-12)
    return val


@dataclass(frozen=True)
class Region:
    """Interval [lo, hi) of the outcome axis and the levels whose kernels matter there."""

    lo: float
    hi: float
    levels: tuple

    @property
    def informative(self) -> bool:
        return len(self.levels) == 1

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, f) -> bool:
        return self.lo <= f < self.hi


@dataclass(frozen=True, eq=False)
class UnsharpMeasurement:
    kernel: MeasurementKernel
    observable: Observable

    def level_weights(self, f):
        """g(f - mu_i) for every group, shape (..., n_levels)."""
        f = np.asarray(f, dtype=float)
        return np.asarray(self.kernel.density(f[..., None] - self.observable.levels))

    def edges(self) -> np.ndarray:
        """Every outcome where the set of relevant levels can change."""
        mu = self.observable.levels
        hw = self.kernel.half_width
        pts = [mu - hw, mu + hw]
        if self.kernel.shape == GAUSSIAN and len(mu) > 1:
            # g_j/g_i = DOMINANCE_RATIO solved for f, for every ordered pair
            s2L = self.kernel.sigma**2 * math.log(1.0 / DOMINANCE_RATIO)
            i, j = np.triu_indices(len(mu), 1)
            mid = 0.5 * (mu[i] + mu[j])
            shift = s2L / (mu[j] - mu[i])
            pts += [mid - shift, mid + shift]
        pts = np.unique(np.concatenate(pts))
        return pts[(pts >= mu[0] - hw) & (pts <= mu[-1] + hw)]

    def active_levels(self, f) -> tuple:
        g = self.level_weights(f)
        if not np.any(g > 0):
            return ()
        keep = (g > 0) & (g >= DOMINANCE_RATIO * g.max())
        return tuple(int(i) for i in np.flatnonzero(keep))

    def regions(self) -> list[Region]:
        pts = self.edges()
        scale = max(1.0, float(np.max(np.abs(pts))))
        out: list[Region] = []
        for a, b in zip(pts[:-1], pts[1:]):
            if b - a <= 1e-12 * scale:
                # measure-zero sliver from rounding (e.g. sigma equal to a gap)
                if out and out[-1].hi == a:
                    out[-1] = Region(out[-1].lo, float(b), out[-1].levels)
                continue
            levels = self.active_levels(0.5 * (a + b))
            if not levels:
                continue
            if out and out[-1].levels == levels and out[-1].hi == a:
                out[-1] = Region(out[-1].lo, b, levels)
            else:
                out.append(Region(float(a), float(b), levels))
        return out

    def has_overlap(self) -> bool:
        return any(not r.informative for r in self.regions())

    def povm_sqrt(self, f) -> np.ndarray:
        return np.einsum("k,kij->ij", np.sqrt(self.level_weights(f)), self.observable.projectors)

    def povm_element(self, f) -> np.ndarray:
        return np.einsum("k,kij->ij", self.level_weights(f), self.observable.projectors)


def classify_regions(H: Observable, k: MeasurementKernel) -> list[Region]:
    """Split the outcome axis into informative and overlap intervals.

    A box kernel gives sharp regions. For the Gaussian kernel level j is
    ignored at f once g(f - mu_j) < 1e-12 g(f - mu_i) for the dominant i.
    Boundaries follow the kernel's half-open convention: each region is
    [lo, hi). Zero-width pieces (e.g. sigma exactly equal to a gap) are
    dropped.
    """
    return UnsharpMeasurement(k, H).regions()


def region_index(regions, f) -> np.ndarray:
    """Index of the region containing each f, or -1 outside all of them."""
    f = np.asarray(f, dtype=float)
    lo = np.array([r.lo for r in regions])
    hi = np.array([r.hi for r in regions])
    idx = np.searchsorted(lo, f, side="right") - 1
    ok = (idx >= 0) & (f < hi[np.clip(idx, 0, None)])
    return np.where(ok, idx, -1)


def povm_sqrt(m: UnsharpMeasurement, f: float) -> np.ndarray:
    return m.povm_sqrt(f)


def outcome_pdf(m: UnsharpMeasurement, rho, f):
    """P(f) = Tr G(f) rho = sum_i g(f - mu_i) Tr(Pi_i rho). Vectorised over f."""
    p = m.observable.populations(rho)
    return m.level_weights(f) @ p


def post_measurement_state(m: UnsharpMeasurement, rho, f: float) -> DensityMatrix:
    """Conditioned state G^{1/2}(f) rho G^{1/2}(f) / P(f)."""
    r = _square(rho)
    g = m.povm_sqrt(f)
    unnorm = g @ r @ g.conj().T
    p = float(np.real(np.trace(unnorm)))
    if p < OUTCOME_FLOOR:
        raise ImpossibleOutcome(f"outcome f={f!r} has density {p!r}")
    out = unnorm / p
    return DensityMatrix(0.5 * (out + out.conj().T), atol=1e-10)


@dataclass(frozen=True)
class OutcomeSample:
    f: float
    branch: int
    informative: bool


def _require_commuting(m: UnsharpMeasurement, rho) -> np.ndarray:
    if not m.observable.commutes_with(rho):
        raise NonCommutingState("sampling needs a state that commutes with the measured observable")
    return m.observable.populations(rho)


def draw_outcomes(m: UnsharpMeasurement, populations, u_branch, u_offset):
    """Mixture sampling: pick group i with its population, then f = mu_i + kernel draw.

    Returns ``(f, branch)`` arrays.
    """
    c = np.cumsum(populations)
    branch = np.minimum(np.searchsorted(c, np.asarray(u_branch) * c[-1], side="right"), len(c) - 1)
    f = m.observable.levels[branch] + m.kernel.ppf(u_offset)
    return f, branch


def sample_outcomes(m: UnsharpMeasurement, rho, stream: TrialStream, n: int, start: int = 0):
    """Vectorised :func:`sample_outcome` over trials ``start .. start+n-1``.

    Returns ``(f, branch, informative)`` arrays.
    """
    p = _require_commuting(m, rho)
    u = stream.uniforms(start, n)
    f, branch = draw_outcomes(m, p, u[:, 0], u[:, 1])
    regions = m.regions()
    idx = region_index(regions, f)
    flags = np.array([r.informative for r in regions] + [False])
    return f, branch, flags[idx]


def sample_outcome(m: UnsharpMeasurement, rho, stream: TrialStream, index: int = 0) -> OutcomeSample:
    f, branch, informative = sample_outcomes(m, rho, stream, 1, start=index)
    return OutcomeSample(float(f[0]), int(branch[0]), bool(informative[0]))


def outcome_cdf(m: UnsharpMeasurement, rho, f):
    """Exact CDF of P(f) for diagonal states, from the kernel CDFs."""
    p = m.observable.populations(rho)
    x = np.asarray(f, dtype=float)[..., None] - m.observable.levels
    k = m.kernel
    if k.shape == BOX:
        cdf = np.clip(x / k.sigma + 0.5, 0.0, 1.0)
    else:
        lo = ndtr(-GAUSSIAN_CUTOFF)
        cdf = np.clip((ndtr(x / k.sigma) - lo) / (1.0 - 2.0 * lo), 0.0, 1.0)
    return cdf @ p


def completeness_residual(m: UnsharpMeasurement) -> float:
    """max |integral of G^{1/2 dagger} G^{1/2} df - 1| by quadrature."""
    pts = m.edges()
    coeff = np.empty(m.observable.n_levels)
    for i in range(m.observable.n_levels):
        coeff[i], _ = integrate_pieces(lambda f, i=i: float(m.level_weights(f)[i]), pts)
    total = np.einsum("k,kij->ij", coeff, m.observable.projectors)
    return float(np.max(np.abs(total - np.eye(m.observable.dim))))


def pdf_normalization_residual(m: UnsharpMeasurement, rho) -> float:
    val, _ = integrate_pieces(lambda f: float(outcome_pdf(m, rho, f)), m.edges())
    return abs(val - 1.0)

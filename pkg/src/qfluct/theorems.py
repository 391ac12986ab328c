"""Work statistics and fluctuation identities for a single unsharp energy measurement.

Protocol: the initial state (commuting with H(t0)) is measured with an
unsharp meter, the conditioned state evolves unitarily to t1, and the work
is W = Tr H(t1) rho(t1, f) - f. The central quantity is

    xi = ln < exp(beta (dF - W)) >,

estimated three ways: Monte Carlo over sampled outcomes, deterministic
quadrature over f, and closed forms for the box meter. The classic
two-projective-measurement protocol is included as a baseline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np

from .dynamics import HamiltonianProtocol, Propagator, propagate
from .errors import NonCommutingState, NotNormalized, RegimeViolation
from .meter import (
    BOX,
    MeasurementKernel,
    UnsharpMeasurement,
    draw_outcomes,
    meter_factor,
    partial_meter_factor,
    region_index,
)
from .qcore import (
    DensityMatrix,
    Observable,
    ThermalEnsemble,
    coherence,
    expectation,
    gibbs_state,
    relative_entropy,
    spectral_decompose,
    spectrum_entropy,
    von_neumann_entropy,
)
from .quadrature import integrate_pieces
from .rng import TrialStream

MONTE_CARLO = "monte_carlo"
QUADRATURE = "quadrature"
CLOSED_NONOVERLAP = "closed_form_nonoverlap"
CLOSED_OVERLAP = "closed_form_overlap"
TWO_POINT = "two_point"

DEFAULT_CHUNK = 1 << 16


def level_populations(rho, H: Observable) -> np.ndarray:
    """Populations of dephase(rho, H), one per eigenvector of ``H``.

    Inside a degenerate group these are the eigenvalues of the block, so
    the vector is the spectrum of the dephased state.
    """
    return _level_populations(np.asarray(getattr(rho, "matrix", rho))[None], H)[0]


def _level_populations(rhos: np.ndarray, H: Observable) -> np.ndarray:
    V = H.eigenvectors
    X = np.einsum("ki,nkl,lj->nij", V.conj(), rhos, V)
    pops = np.real(np.diagonal(X, axis1=1, axis2=2)).copy()
    for g in np.flatnonzero(H.ranks > 1):
        idx = np.flatnonzero(H.group_of == g)
        pops[:, idx] = np.linalg.eigvalsh(X[:, idx[:, None], idx])
    return pops


def thermal_level_populations(ensemble: ThermalEnsemble) -> np.ndarray:
    H = ensemble.observable
    return (ensemble.populations / H.ranks)[H.group_of]


def _kl_thermal_rows(p: np.ndarray, ensemble: ThermalEnsemble) -> np.ndarray:
    """Rows of D_KL(p || thermal) with the exact ln q = -beta mu - ln Z."""
    H = ensemble.observable
    log_q = -ensemble.beta * H.levels[H.group_of] - ensemble.log_z
    safe_p = np.where(p > 0, p, 1.0)
    return np.sum(np.where(p > 0, p * (np.log(safe_p) - log_q), 0.0), axis=-1)


class SingleMeasurementSetup:
    """Everything fixed before the first trial.

    Parameters
    ----------
    protocol : HamiltonianProtocol
    kernel : MeasurementKernel
        Meter acting on H(t0).
    beta : float
        Inverse temperature of the reference (thermal) path.
    initial : DensityMatrix or array_like, optional
        Initial state; must commute with H(t0). Defaults to the Gibbs state.
    propagator : Propagator, optional
        Precomputed U(t1, t0); integrated with tolerance ``tol`` otherwise.
    """

    def __init__(self, protocol: HamiltonianProtocol, kernel: MeasurementKernel, beta: float,
                 initial=None, propagator: Propagator | None = None, tol: float = 1e-10):
        self.protocol = protocol
        self.kernel = kernel
        self.beta = float(beta)
        self.h0 = spectral_decompose(protocol.initial_hamiltonian())
        self.h1 = spectral_decompose(protocol.final_hamiltonian())
        self.measurement = UnsharpMeasurement(kernel, self.h0)
        self.thermal0 = gibbs_state(self.h0, self.beta)
        self.thermal1 = gibbs_state(self.h1, self.beta)
        if initial is None:
            self.initial = self.thermal0.state
        else:
            self.initial = initial if isinstance(initial, DensityMatrix) else DensityMatrix(initial)
        if not self.h0.commutes_with(self.initial):
            raise NonCommutingState("the initial state must commute with H(t0)")
        self.propagator = propagate(protocol, tol=tol) if propagator is None else propagator
        self.populations = self.h0.populations(self.initial)
        self.beta_delta_f = self.thermal0.log_z - self.thermal1.log_z
        self.delta_f = self.beta_delta_f / self.beta if self.beta > 0 else math.nan
        self.mean_energy0 = expectation(self.h0, self.initial)

        U = self.propagator.U
        rho0 = self.initial.matrix
        m, d = self.h0.n_levels, self.h0.dim
        states = np.zeros((m, d, d), dtype=complex)
        for i, P in enumerate(self.h0.projectors):
            if self.populations[i] > 0:
                states[i] = U @ (P @ rho0 @ P / self.populations[i]) @ U.conj().T
        self.branch_states = states
        self.branch_energies = np.real(np.einsum("ij,kji->k", self.h1.matrix, states))
        self.regions = self.measurement.regions()
        # exact ln rho_th(t1); stays accurate when excited populations underflow
        self.log_thermal1 = -self.beta * self.h1.matrix - self.thermal1.log_z * np.eye(d)

        self.entropy0 = von_neumann_entropy(rho0)
        self.coherence0 = coherence(rho0, self.h0)
        self.kl0 = float(_kl_thermal_rows(level_populations(rho0, self.h0), self.thermal0))
        self.relative_entropy0 = relative_entropy(rho0, self.thermal0)

    @property
    def is_thermal_start(self) -> bool:
        return bool(np.max(np.abs(self.populations - self.thermal0.populations)) < 1e-12)

    def regime(self) -> str:
        return "overlap" if any(not r.informative for r in self.regions) else "nonoverlap"

    def branch_relative_entropies(self) -> np.ndarray:
        """S(rho_i(t1) || rho_th(t1)) for each measured level (inf if unpopulated)."""
        return np.array([
            relative_entropy(s, self.thermal1) if p > 0 else math.inf
            for s, p in zip(self.branch_states, self.populations)
        ])

    def branch_entropies(self) -> np.ndarray:
        return np.array([
            von_neumann_entropy(s) if p > 0 else 0.0 for s, p in zip(self.branch_states, self.populations)
        ])

    def conditioned_weights(self, f) -> tuple[np.ndarray, np.ndarray]:
        """Outcome density P(f) and branch weights p_i g(f - mu_i) / P(f)."""
        g = self.measurement.level_weights(f) * self.populations
        P = g.sum(axis=-1)
        with np.errstate(invalid="ignore", divide="ignore"):
            w = np.where(P[..., None] > 0, g / P[..., None], 0.0)
        return P, w

    def work(self, f):
        """W(f) = Tr H(t1) rho(t1, f) - f."""
        _, w = self.conditioned_weights(f)
        return w @ self.branch_energies - np.asarray(f)


@dataclass(frozen=True)
class TrialRecord:
    index: int
    f: float
    branch: int
    informative: bool
    W: float
    S_re: float
    dS: float
    dC: float
    dD_KL: float
    dS_R: float
    log_weight: float

    @property
    def weight(self) -> float:
        return math.exp(self.log_weight)


@dataclass(frozen=True, eq=False)
class TrialBatch:
    """Column arrays of trial records, one entry per trial."""

    index: np.ndarray
    f: np.ndarray
    branch: np.ndarray
    informative: np.ndarray
    W: np.ndarray
    S_re: np.ndarray
    dS: np.ndarray
    dC: np.ndarray
    dD_KL: np.ndarray
    dS_R: np.ndarray
    log_weight: np.ndarray
    C1: np.ndarray
    D1: np.ndarray
    beta: float
    beta_delta_f: float
    mean_energy0: float
    initial_entropy: float

    def __len__(self):
        return len(self.f)

    @property
    def weight(self) -> np.ndarray:
        return np.exp(self.log_weight)

    def product_log_weight(self) -> np.ndarray:
        """beta (f - <H(t0)>) - dS - dC - dD_KL, the integrand exponent in product form."""
        return self.beta * (self.f - self.mean_energy0) - self.dS - self.dC - self.dD_KL

    def record(self, i: int) -> TrialRecord:
        return TrialRecord(
            int(self.index[i]), float(self.f[i]), int(self.branch[i]), bool(self.informative[i]),
            float(self.W[i]), float(self.S_re[i]), float(self.dS[i]), float(self.dC[i]),
            float(self.dD_KL[i]), float(self.dS_R[i]), float(self.log_weight[i]),
        )

    @classmethod
    def concatenate(cls, parts):
        first = parts[0]
        kw = {}
        for fl in fields(cls):
            v = getattr(first, fl.name)
            kw[fl.name] = np.concatenate([getattr(p, fl.name) for p in parts]) if isinstance(v, np.ndarray) else v
        return cls(**kw)


def _trial_chunk(setup: SingleMeasurementSetup, stream: TrialStream, start: int, n: int) -> TrialBatch:
    u = stream.uniforms(start, n)
    f, branch = draw_outcomes(setup.measurement, setup.populations, u[:, 0], u[:, 1])
    regions = setup.regions
    flags = np.array([r.informative for r in regions] + [False])
    informative = flags[region_index(regions, f)]

    _, w = setup.conditioned_weights(f)
    rho1 = np.einsum("nk,kij->nij", w, setup.branch_states)
    energy = w @ setup.branch_energies
    W = energy - f

    S1 = spectrum_entropy(np.linalg.eigvalsh(rho1))
    S_re = -S1 - np.real(np.einsum("nij,ji->n", rho1, setup.log_thermal1))
    pops1 = _level_populations(rho1, setup.h1)
    C1 = spectrum_entropy(pops1) - S1
    D1 = _kl_thermal_rows(pops1, setup.thermal1)

    beta = setup.beta
    return TrialBatch(
        index=np.arange(start, start + n),
        f=f, branch=branch, informative=informative, W=W, S_re=S_re,
        dS=S1 - setup.entropy0, dC=C1 - setup.coherence0, dD_KL=D1 - setup.kl0,
        dS_R=S_re - setup.relative_entropy0,
        log_weight=setup.beta_delta_f - beta * W,
        C1=C1, D1=D1, beta=beta, beta_delta_f=setup.beta_delta_f,
        mean_energy0=setup.mean_energy0, initial_entropy=setup.entropy0,
    )


def run_trials(setup: SingleMeasurementSetup, n: int, stream: TrialStream, start: int = 0,
               chunk: int = DEFAULT_CHUNK) -> TrialBatch:
    """Trials ``start .. start+n-1``; results do not depend on ``chunk``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    parts = [_trial_chunk(setup, stream, s, min(chunk, start + n - s)) for s in range(start, start + n, chunk)]
    return parts[0] if len(parts) == 1 else TrialBatch.concatenate(parts)


def run_single_trial(setup: SingleMeasurementSetup, stream: TrialStream, index: int = 0) -> TrialRecord:
    return _trial_chunk(setup, stream, index, 1).record(0)


@dataclass(frozen=True)
class WorkHistogram:
    mass: np.ndarray
    edges: np.ndarray
    n_trials: int


def work_distribution(setup: SingleMeasurementSetup, n: int, bins, stream: TrialStream, range=None) -> WorkHistogram:
    """Histogram of W over ``n`` trials; ``mass`` sums to one.

    ``bins`` and ``range`` follow ``numpy.histogram``; the default range
    spans all sampled works.
    """
    W = run_trials(setup, n, stream).W
    if range is None:
        lo, hi = float(W.min()), float(W.max())
        pad = 1e-9 * max(1.0, abs(lo), abs(hi))
        range = (lo - pad, hi + pad)
    counts, edges = np.histogram(W, bins=bins, range=range)
    return WorkHistogram(counts / n, edges, n)


@dataclass(frozen=True)
class XiEstimate:
    """Value of xi and its uncertainty.

    Monte Carlo estimates carry a delta-method standard error; the
    deterministic methods have ``standard_error = 0`` and report their
    absolute error bound in ``tolerance``.
    """

    xi: float
    standard_error: float
    n_trials: int
    method: str
    tolerance: float = 0.0


def xi_from_log_weights(log_weight: np.ndarray, method: str = MONTE_CARLO) -> XiEstimate:
    """ln of the mean of exp(log_weight), with the delta-method standard error."""
    log_weight = np.asarray(log_weight, dtype=float)
    n = len(log_weight)
    shift = float(np.max(log_weight))
    w = np.exp(log_weight - shift)
    mean = float(np.mean(w))
    se = float(np.std(w, ddof=1) / (math.sqrt(n) * mean)) if n > 1 else math.inf
    return XiEstimate(shift + math.log(mean), se, n, method)


def xi_monte_carlo(setup: SingleMeasurementSetup, n: int, stream: TrialStream, batch: TrialBatch | None = None) -> XiEstimate:
    if n < 100:
        raise ValueError("Monte Carlo xi needs at least 100 trials")
    batch = run_trials(setup, n, stream) if batch is None else batch
    return xi_from_log_weights(batch.log_weight)


def _merge_breakpoints(exact, extra, lo, hi) -> np.ndarray:
    """Breakpoints in [lo, hi]; an ``extra`` point within rounding of an ``exact`` one is dropped."""
    tol = 1e-12 * (hi - lo)
    pts = [x for x in exact if lo <= x <= hi]
    for x in extra:
        if lo <= x <= hi and min(abs(x - y) for y in pts) > tol:
            pts.append(x)
    return np.unique(pts)


def xi_quadrature(setup: SingleMeasurementSetup, epsrel: float = 1e-12) -> XiEstimate:
    """Integrate P(f) exp(beta (dF - W(f))) over f with the pointwise conditioned state.

    P(f) is split into its level terms p_i g(f - mu_i) and each term is
    integrated in the offset x = f - mu_i, so the kernel edges sit exactly
    at +-sigma/2 however narrow the meter is.
    """
    beta, k = setup.beta, setup.kernel
    mu, p, e1 = setup.h0.levels, setup.populations, setup.branch_energies
    hw = k.half_width
    edges = setup.measurement.edges()
    total, err = 0.0, 0.0
    for i in np.flatnonzero(p > 0):
        d = mu[i] - mu  # d[i] is exactly zero

        def integrand(x, i=i, d=d):
            g = k.density(d + x) * p
            P = g.sum()
            if P <= 0:
                return 0.0
            return float(p[i] * k.density(x) * math.exp(beta * (mu[i] + x - g @ e1 / P)))

        pts = _merge_breakpoints(np.concatenate([[-hw, hw], -d - hw, -d + hw]), edges - mu[i], -hw, hw)
        val, e = integrate_pieces(integrand, pts, epsabs=0.0, epsrel=epsrel)
        total += val
        err += e
    return XiEstimate(setup.beta_delta_f + math.log(total), 0.0, 0, QUADRATURE, tolerance=err / total)


def nonoverlap_factor(beta_sigma: float, s_re) -> float:
    """Box-meter closed form for thermal starts: (2/x) sinh(x/2) sum_i exp(-S_re(i))."""
    gbar = 1.0 if beta_sigma == 0 else 2.0 * math.sinh(0.5 * beta_sigma) / beta_sigma
    return gbar * float(np.sum(np.exp(-np.asarray(s_re, dtype=float))))


def overlap_bracket(p, s_re) -> float:
    """<exp(-S_re)> - exp(-<S_re>) over the level populations; non-negative by convexity."""
    p = np.asarray(p, dtype=float)
    s = np.asarray(s_re, dtype=float)
    return float(np.sum(p * np.exp(-s)) - math.exp(-np.sum(p * s)))


def box_overlap_factor(beta: float, sigma: float, gap: float, p, s_re) -> float:
    """Two-level box-meter closed form for thermal starts in the overlap regime.

    exp(xi) = (2/(b s)) sinh(b s/2) sum_i e^{-S_re(i)}
              + (2/(b s)) (sinh(b gap - b s/2) - sinh(b s/2)) (<e^{-S_re}> - e^{-<S_re>})

    The correction vanishes at sigma = gap, where it joins the
    non-overlap branch continuously.
    """
    x = beta * sigma
    base = nonoverlap_factor(x, s_re)
    coeff = 2.0 * (math.sinh(beta * gap - 0.5 * x) - math.sinh(0.5 * x)) / x
    return base + coeff * overlap_bracket(p, s_re)


def closed_form_nonoverlap(setup: SingleMeasurementSetup, check_regime: bool = True) -> XiEstimate:
    """Closed form valid when every outcome identifies a single level (any kernel, N levels).

    exp(xi) = Gbar(i beta) sum_i (p_i Z(t0) e^{beta mu_i}) exp(-S_re(i) - S(rho_i(t1))).
    The bracket is 1 for a thermal start; S(rho_i(t1)) vanishes for
    non-degenerate levels, leaving the usual sum of exp(-S_re(i)).
    """
    if check_regime and setup.regime() != "nonoverlap":
        raise RegimeViolation("kernel supports of distinct levels overlap")
    gbar = meter_factor(setup.kernel, setup.beta)
    p = setup.populations
    occupied = p > 0
    log_b = np.log(p[occupied]) + setup.thermal0.log_z + setup.beta * setup.h0.levels[occupied]
    s = setup.branch_relative_entropies()[occupied] + setup.branch_entropies()[occupied]
    value = gbar * float(np.sum(np.exp(log_b - s)))
    return XiEstimate(math.log(value), 0.0, 0, CLOSED_NONOVERLAP)


def closed_form_overlap_box(setup: SingleMeasurementSetup) -> XiEstimate:
    """Two-level box meter with sigma above the gap.

    Thermal starts use :func:`box_overlap_factor`. Other diagonal starts use
    the general split into full-support terms minus their overlap parts plus
    the overlap-region integral with the mixed conditioned state.
    """
    if setup.h0.n_levels != 2 or setup.kernel.shape != BOX:
        raise RegimeViolation("overlap closed form needs a two-level system and a box kernel")
    if setup.regime() != "overlap":
        raise RegimeViolation("sigma does not exceed the level gap")
    beta, sigma = setup.beta, setup.kernel.sigma
    mu = setup.h0.levels
    p = setup.populations
    s = setup.branch_relative_entropies()
    if setup.is_thermal_start:
        value = box_overlap_factor(beta, sigma, mu[1] - mu[0], p, s)
        return XiEstimate(math.log(value), 0.0, 0, CLOSED_OVERLAP)
    ov = next(r for r in setup.regions if not r.informative)
    gbar = meter_factor(setup.kernel, beta)
    value = 0.0
    for i in range(2):
        if p[i] <= 0:
            continue
        b = math.exp(math.log(p[i]) + setup.thermal0.log_z + beta * mu[i])
        value += b * (gbar - partial_meter_factor(setup.kernel, beta, (ov.lo, ov.hi), mu[i])) * math.exp(-s[i])
    # sum_i p_i = 1 and the box density is flat, so P(f) = 1/sigma on the overlap
    ps = float(np.sum(np.where(p > 0, p * s, 0.0)))
    j = (math.exp(beta * ov.hi) - math.exp(beta * ov.lo)) / (beta * sigma)
    value += math.exp(setup.thermal0.log_z - ps) * j
    return XiEstimate(math.log(value), 0.0, 0, CLOSED_OVERLAP)


@dataclass(frozen=True)
class TrialAverages:
    mean_dS: float
    mean_dC: float
    mean_dD_KL: float
    mean_dS_R: float
    se_dS: float
    se_dC: float
    se_dD_KL: float
    se_dS_R: float
    xi_direct: float
    xi_product: float

    @property
    def product_form_residual(self) -> float:
        return abs(self.xi_product - self.xi_direct)


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    n = len(x)
    return float(np.mean(x)), float(np.std(x, ddof=1) / math.sqrt(n)) if n > 1 else 0.0


def decompose_trial_average(records: TrialBatch) -> TrialAverages:
    """Means of the entropy and coherence increments, and xi from both integrand forms."""
    if len(records) == 0:
        raise ValueError("no records")
    stats = [_mean_se(getattr(records, name)) for name in ("dS", "dC", "dD_KL", "dS_R")]
    return TrialAverages(
        *(m for m, _ in stats), *(s for _, s in stats),
        xi_direct=xi_from_log_weights(records.log_weight).xi,
        xi_product=xi_from_log_weights(records.product_log_weight()).xi,
    )


def shannon_entropy(pdf, breakpoints, normalization_tol: float = 1e-8) -> float:
    """Differential entropy -integral g ln g of a density on [breakpoints[0], breakpoints[-1]].

    ``pdf`` is a callable; the integral is split at ``breakpoints``.
    """
    mass, _ = integrate_pieces(lambda x: float(pdf(x)), breakpoints)
    if abs(mass - 1.0) > normalization_tol:
        raise NotNormalized(f"density integrates to {mass!r}")

    def integrand(x):
        g = float(pdf(x))
        return -g * math.log(g) if g > 0 else 0.0

    val, _ = integrate_pieces(integrand, breakpoints)
    return val


def info_gain(setup: SingleMeasurementSetup) -> float:
    """Mean von Neumann entropy change H_S(G(f|0)) - H_S(P(f)).

    The value is <= 0: the measurement removes on average between 0 and
    S(rho(t0)) nats from the state, all of it only when every outcome is
    informative.
    """
    k = setup.kernel
    h_meter = shannon_entropy(k.density, [k.support[0], 0.0, k.support[1]])
    pops = setup.populations

    def pdf(f):
        return float(setup.measurement.level_weights(f) @ pops)

    h_outcome = shannon_entropy(pdf, setup.measurement.edges())
    return h_meter - h_outcome


def mean_entropy_change(setup: SingleMeasurementSetup) -> float:
    """<S(rho(t0, f))> - S(rho(t0)) by quadrature over the outcome density."""
    s_branch = setup.branch_entropies()

    def integrand(f):
        P, w = setup.conditioned_weights(np.array([f]))
        if P[0] <= 0:
            return 0.0
        w = w[0]
        nz = w > 0
        return float(P[0] * (-np.sum(w[nz] * np.log(w[nz])) + w @ s_branch))

    val, _ = integrate_pieces(integrand, setup.measurement.edges())
    return val - setup.entropy0


@dataclass(frozen=True)
class JensenCheck:
    passed: bool
    slack: float
    tolerance: float


def jensen_bound_check(estimate: XiEstimate, mean_work: float, setup: SingleMeasurementSetup,
                       work_standard_error: float = 0.0) -> JensenCheck:
    """beta <W> >= beta dF - xi, allowing three propagated standard errors."""
    slack = setup.beta * mean_work - setup.beta_delta_f + estimate.xi
    tol = 3.0 * math.hypot(estimate.standard_error, setup.beta * work_standard_error)
    return JensenCheck(slack >= -tol, slack, tol)


@dataclass(frozen=True, eq=False)
class TwoPointSetup:
    """Two projective energy measurements bracketing the unitary drive."""

    initial: ThermalEnsemble
    protocol: HamiltonianProtocol
    propagator: Propagator
    final: ThermalEnsemble
    transitions: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, initial: ThermalEnsemble, protocol: HamiltonianProtocol,
              propagator: Propagator | None = None) -> TwoPointSetup:
        U = (propagator or propagate(protocol)).U
        h0 = initial.observable
        h1 = spectral_decompose(protocol.final_hamiltonian())
        start = h0.projectors / h0.ranks[:, None, None]
        evolved = np.einsum("ij,kjl,ml->kim", U, start, U.conj())
        T = np.real(np.einsum("jab,kba->kj", h1.projectors, evolved))
        T = np.clip(T, 0.0, None)
        T /= T.sum(axis=1, keepdims=True)
        return cls(initial, protocol, propagator or Propagator(U, protocol.t0, protocol.t1),
                   gibbs_state(h1, initial.beta), T)

    @property
    def beta_delta_f(self) -> float:
        return self.initial.log_z - self.final.log_z


def two_point_work(setup: TwoPointSetup, n: int, stream: TrialStream, start: int = 0) -> np.ndarray:
    """W = nu - mu for trials ``start .. start+n-1``.

    Word 0 of each trial picks the initial level, word 1 the final one.
    """
    u = stream.uniforms(start, n)
    p = setup.initial.populations
    i = np.minimum(np.searchsorted(np.cumsum(p), u[:, 0] * p.sum(), side="right"), len(p) - 1)
    c = np.cumsum(setup.transitions, axis=1)[i]
    j = np.minimum(np.sum(c < (u[:, 1] * c[:, -1])[:, None], axis=1), c.shape[1] - 1)
    return setup.final.observable.levels[j] - setup.initial.observable.levels[i]


def two_point_trial(initial: ThermalEnsemble, protocol: HamiltonianProtocol, stream: TrialStream,
                    index: int = 0, propagator: Propagator | None = None) -> float:
    return float(two_point_work(TwoPointSetup.build(initial, protocol, propagator), 1, stream, index)[0])


def two_point_jarzynski(setup: TwoPointSetup, n: int, stream: TrialStream) -> XiEstimate:
    """ln < exp(beta (dF - W)) > for the projective two-point protocol (zero in expectation)."""
    W = two_point_work(setup, n, stream)
    return xi_from_log_weights(setup.beta_delta_f - setup.initial.beta * W, method=TWO_POINT)

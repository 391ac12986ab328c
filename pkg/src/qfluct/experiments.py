"""Parameter sweeps, CSV output and the self-validation suite."""

from __future__ import annotations

import io
import json
import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import __version__
from .config import (
    FIG1_CONFIG,
    ExperimentConfig,
    beta_from_temperature,
    natural_to_seconds,
    parse_config,
    seconds_to_natural,
    temperature_from_beta,
)
from .dynamics import Propagator, RabiProtocol, propagate
from .errors import ValidationError
from .meter import (
    BOX,
    GAUSSIAN,
    MeasurementKernel,
    UnsharpMeasurement,
    completeness_residual,
    meter_factor,
    meter_factor_quadrature,
    outcome_cdf,
    pdf_normalization_residual,
    sample_outcomes,
)
from .qcore import (
    coherence,
    gibbs_state,
    kl_divergence,
    random_density_matrix,
    relative_entropy,
    spectral_decompose,
)
from .rng import TrialStream
from .theorems import (
    SingleMeasurementSetup,
    TwoPointSetup,
    closed_form_nonoverlap,
    closed_form_overlap_box,
    decompose_trial_average,
    info_gain,
    jensen_bound_check,
    level_populations,
    mean_entropy_change,
    run_trials,
    thermal_level_populations,
    two_point_jarzynski,
    xi_from_log_weights,
    xi_quadrature,
)

NAN = math.nan


@dataclass(frozen=True)
class SweepRow:
    """One grid point. Monte Carlo columns are NaN under ``--quadrature-only``;
    closed-form columns are NaN where no closed form applies."""

    sweep_value: float
    beta_sigma: float
    rabi_ratio: float
    regime: str
    xi_mc: float
    xi_se: float
    xi_quadrature: float
    xi_closed_nonoverlap: float
    xi_closed_overlap: float
    mean_W: float
    se_W: float
    mean_dS: float
    se_dS: float
    mean_dC: float
    se_dC: float
    mean_dDKL: float
    se_dDKL: float
    mean_dSR: float
    se_dSR: float
    jensen_slack: float
    jensen_tolerance: float


COLUMNS = tuple(f.name for f in fields(SweepRow))


@dataclass(frozen=True)
class SweepResult:
    axis: str
    rows: tuple
    config: ExperimentConfig
    command: str

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write(f"# qfluct {__version__}\n")
        out.write(f"# command: {self.command}\n")
        out.write(f"# sweep_axis: {self.axis}\n")
        out.write(f"# config_sha256: {self.config.digest()}\n")
        out.write(f"# master_seed: {self.config.master_seed}\n")
        out.write(f"# n_trials: {self.config.n_trials}\n")
        out.write(f"# rng: philox4x64-10 key=(master_seed, sweep_index)\n")
        out.write(",".join(COLUMNS) + "\n")
        for row in self.rows:
            out.write(",".join(_cell(getattr(row, c)) for c in COLUMNS) + "\n")
        return out.getvalue()

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())


def _cell(v) -> str:
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


def read_csv(path) -> tuple[dict, list[dict]]:
    """Parse a file written by :meth:`SweepResult.write` into (metadata, rows)."""
    meta, rows, header = {}, [], None
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition(": ")
                meta[key] = val
            elif header is None:
                header = line.split(",")
            elif line:
                cells = line.split(",")
                rows.append({k: (v if k == "regime" else float(v)) for k, v in zip(header, cells)})
    return meta, rows


def make_kernel(shape: str, sigma: float, mass: float = 1.0) -> MeasurementKernel:
    return MeasurementKernel(shape, float(sigma), mass)


def build_setup(config: ExperimentConfig, sigma: float | None = None, rabi_ratio: float | None = None,
                propagator: Propagator | None = None) -> SingleMeasurementSetup:
    """Thermal-start setup for the driven qubit of ``config``, with optional overrides."""
    protocol = RabiProtocol(1.0, config.rabi_ratio if rabi_ratio is None else rabi_ratio,
                            config.psi, 0.0, config.t_final)
    kernel = make_kernel(config.kernel, config.sigma if sigma is None else sigma)
    return SingleMeasurementSetup(protocol, kernel, config.beta, propagator=propagator)


def evaluate_point(setup: SingleMeasurementSetup, n: int, stream: TrialStream, sweep_value: float,
                   quadrature_only: bool = False) -> SweepRow:
    regime = setup.regime()
    beta = setup.beta
    quad = xi_quadrature(setup).xi
    if setup.kernel.shape == BOX or regime == "nonoverlap":
        closed_non = closed_form_nonoverlap(setup, check_regime=False).xi
    else:
        closed_non = NAN
    if setup.kernel.shape == BOX and setup.h0.n_levels == 2 and regime == "overlap":
        closed_ov = closed_form_overlap_box(setup).xi
    else:
        closed_ov = NAN
    mc = dict(xi_mc=NAN, xi_se=NAN, mean_W=NAN, se_W=NAN, mean_dS=NAN, se_dS=NAN, mean_dC=NAN,
              se_dC=NAN, mean_dDKL=NAN, se_dDKL=NAN, mean_dSR=NAN, se_dSR=NAN,
              jensen_slack=NAN, jensen_tolerance=NAN)
    if not quadrature_only:
        batch = run_trials(setup, n, stream)
        est = xi_from_log_weights(batch.log_weight)
        avg = decompose_trial_average(batch)
        mean_w = float(np.mean(batch.W))
        se_w = float(np.std(batch.W, ddof=1) / math.sqrt(n))
        jensen = jensen_bound_check(est, mean_w, setup, se_w)
        mc = dict(xi_mc=est.xi, xi_se=est.standard_error, mean_W=mean_w, se_W=se_w,
                  mean_dS=avg.mean_dS, se_dS=avg.se_dS, mean_dC=avg.mean_dC, se_dC=avg.se_dC,
                  mean_dDKL=avg.mean_dD_KL, se_dDKL=avg.se_dD_KL, mean_dSR=avg.mean_dS_R,
                  se_dSR=avg.se_dS_R, jensen_slack=jensen.slack, jensen_tolerance=jensen.tolerance)
    return SweepRow(
        sweep_value=float(sweep_value), beta_sigma=beta * setup.kernel.sigma,
        rabi_ratio=float(getattr(setup.protocol, "rabi", NAN)), regime=regime,
        xi_quadrature=quad, xi_closed_nonoverlap=closed_non, xi_closed_overlap=closed_ov, **mc,
    )


def _sweep_indices(grid) -> list[int]:
    # equal grid values share a key so their rows are bit-identical
    first = {}
    return [first.setdefault(v, len(first)) for v in grid]


def _require_axis(config: ExperimentConfig, axis: str):
    if config.sweep_axis is None:
        return
    if config.sweep_axis != axis:
        raise ValidationError("run.sweep.axis", f"expected '{axis}', config has '{config.sweep_axis}'")


DEFAULT_BETA_SIGMA_GRID = tuple(float(v) for v in np.linspace(0.2, 6.0, 30))
DEFAULT_RABI_GRID = tuple(float(v) for v in np.geomspace(1e-5, 1e-1, 9))


def sweep_sigma(config: ExperimentConfig, quadrature_only: bool = False) -> SweepResult:
    """xi against beta*sigma; the propagator is shared by every point."""
    _require_axis(config, "beta_sigma")
    if config.beta <= 0:
        raise ValidationError("bath", "a beta*sigma sweep needs a positive inverse temperature")
    grid = config.sweep_grid or DEFAULT_BETA_SIGMA_GRID
    if min(grid) <= 0:
        raise ValidationError("run.sweep.grid", "beta*sigma values must be positive")
    U = propagate(RabiProtocol(1.0, config.rabi_ratio, config.psi, 0.0, config.t_final))
    rows = []
    for value, idx in zip(grid, _sweep_indices(grid)):
        setup = build_setup(config, sigma=value / config.beta, propagator=U)
        rows.append(evaluate_point(setup, config.n_trials, TrialStream(config.master_seed, idx),
                                   value, quadrature_only))
    return SweepResult("beta_sigma", tuple(rows), config, "sweep-sigma")


def sweep_rabi(config: ExperimentConfig, quadrature_only: bool = False) -> SweepResult:
    """Entropy and coherence increments against Omega_R/omega_q at fixed sigma."""
    _require_axis(config, "rabi_ratio")
    grid = config.sweep_grid or DEFAULT_RABI_GRID
    rows = []
    for value, idx in zip(grid, _sweep_indices(grid)):
        setup = build_setup(config, rabi_ratio=value)
        rows.append(evaluate_point(setup, config.n_trials, TrialStream(config.master_seed, idx),
                                   value, quadrature_only))
    return SweepResult("rabi_ratio", tuple(rows), config, "sweep-rabi")


def single_run(config: ExperimentConfig, quadrature_only: bool = False) -> SweepResult:
    """The configured point alone; ``sweep_value`` is beta*sigma."""
    setup = build_setup(config)
    row = evaluate_point(setup, config.n_trials, TrialStream(config.master_seed, 0),
                         config.beta * config.sigma, quadrature_only)
    return SweepResult("none", (row,), config, "single-run")


# ---------------------------------------------------------------- validation


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    residual: float
    tolerance: float


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def to_json(self) -> str:
        def clean(v):
            return v if not isinstance(v, float) or math.isfinite(v) else repr(v)

        doc = {"passed": self.passed,
               "checks": [{k: clean(v) for k, v in asdict(c).items()} for c in self.checks]}
        return json.dumps(doc, indent=2)


def _check(name, residual, tolerance) -> CheckResult:
    residual = float(residual)
    return CheckResult(name, bool(residual <= tolerance), residual, float(tolerance))


def validate(config: ExperimentConfig | None = None, kernel_mass: float = 1.0,
             n_trials: int | None = None) -> ValidationReport:
    """Run the invariant suites; every check reports a residual and its tolerance.

    ``kernel_mass`` rescales the meter density (1 for a physical kernel) so
    the completeness checks can be shown to fail.
    """
    config = parse_config(FIG1_CONFIG) if config is None else config
    n = config.n_trials if n_trials is None else n_trials
    rng = np.random.default_rng(config.master_seed)
    checks = []
    beta = config.beta

    # units
    f_hz = 6.541e9
    b = beta_from_temperature(0.14, f_hz)
    checks.append(_check("units_round_trip", max(
        abs(temperature_from_beta(b, f_hz) - 0.14) / 0.14,
        abs(natural_to_seconds(seconds_to_natural(1e-9, f_hz), f_hz) - 1e-9) / 1e-9), 1e-12))

    # qcore
    worst_recon, worst_decomp = 0.0, 0.0
    for d in (2, 3, 4):
        A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        H = spectral_decompose(A + A.conj().T)
        recon = np.einsum("k,kij->ij", H.levels, H.projectors)
        worst_recon = max(worst_recon, float(np.max(np.abs(recon - H.matrix))))
        rho = random_density_matrix(d, rng)
        th = gibbs_state(H, 0.7).state
        lhs = relative_entropy(rho, th)
        rhs = coherence(rho, H) + kl_divergence(level_populations(rho, H),
                                                thermal_level_populations(gibbs_state(H, 0.7)))
        worst_decomp = max(worst_decomp, abs(lhs - rhs))
    checks.append(_check("spectral_reconstruction", worst_recon, 1e-10))
    checks.append(_check("relative_entropy_decomposition", worst_decomp, 1e-9))
    checks.append(_check("gibbs_vs_mpmath", _gibbs_mpmath_residual(), 1e-14))

    # dynamics
    protocol = RabiProtocol(1.0, config.rabi_ratio, config.psi, 0.0, config.t_final)
    U = propagate(protocol)
    checks.append(_check("propagator_unitarity", U.unitarity_residual(), 1e-9))
    tm = 0.5 * (protocol.t0 + protocol.t1)
    split = propagate(protocol, protocol.t0, tm).then(propagate(protocol, tm, protocol.t1))
    checks.append(_check("propagator_composition", float(np.max(np.abs(split.U - U.U))), 1e-8))
    strong = RabiProtocol(1.0, 0.3, config.psi, 0.0, config.t_final)
    checks.append(_check("propagator_unitarity_strong_drive", propagate(strong).unitarity_residual(), 1e-9))

    # meter
    h0 = spectral_decompose(protocol.initial_hamiltonian())
    gap = h0.min_gap()
    for shape in (BOX, GAUSSIAN):
        for sigma in (0.5 * gap, 2.0 * gap):
            m = UnsharpMeasurement(make_kernel(shape, sigma, kernel_mass), h0)
            tag = f"{shape}_sigma{sigma / gap:g}gap"
            checks.append(_check(f"povm_completeness_{tag}", completeness_residual(m), 1e-8))
            checks.append(_check(f"pdf_normalization_{tag}",
                                 pdf_normalization_residual(m, gibbs_state(h0, beta).state), 1e-8))
    for shape, x in ((BOX, 1.0), (BOX, 20.0), (GAUSSIAN, 1.0), (GAUSSIAN, 20.0)):
        k = make_kernel(shape, x / beta if beta > 0 else x)
        closed, quad = meter_factor(k, beta), meter_factor_quadrature(k, beta)
        checks.append(_check(f"meter_factor_{shape}_betasigma{x:g}", abs(closed - quad) / abs(quad), 1e-9))
    thermal = gibbs_state(h0, beta).state
    for shape in (BOX, GAUSSIAN):
        m = UnsharpMeasurement(make_kernel(shape, 2.0 * gap), h0)
        # the KS threshold is calibrated at 1e5 samples
        f, _, _ = sample_outcomes(m, thermal, TrialStream(config.master_seed, 0), max(n, 100_000))
        checks.append(_check(f"sampler_ks_{shape}", _ks_statistic(f, lambda x: outcome_cdf(m, thermal, x)), 1e-2))

    # theorems: three-way agreement on both sides of the transition
    x_lo, x_hi = 0.5 * beta * gap, 2.0 * beta * gap
    for label, x in (("nonoverlap", x_lo), ("overlap", x_hi)):
        setup = build_setup(config, sigma=x / beta, propagator=U)
        quad = xi_quadrature(setup).xi
        closed = (closed_form_nonoverlap(setup) if label == "nonoverlap" else closed_form_overlap_box(setup)).xi
        batch = run_trials(setup, n, TrialStream(config.master_seed, 1))
        est = xi_from_log_weights(batch.log_weight)
        checks.append(_check(f"xi_closed_vs_quadrature_{label}", abs(closed - quad), 1e-6))
        checks.append(_check(f"xi_mc_vs_quadrature_{label}", abs(est.xi - quad), max(3 * est.standard_error, 1e-2)))
        sub = run_trials(setup, 1000, TrialStream(config.master_seed, 2))
        resid = np.abs(np.expm1(sub.product_log_weight() - sub.log_weight))
        checks.append(_check(f"per_trial_decomposition_{label}", float(np.max(np.abs(
            sub.S_re - (sub.C1 + sub.D1)))), 1e-9))
        checks.append(_check(f"product_form_weight_{label}", float(np.max(resid)), 1e-9))
        checks.append(_check(f"info_gain_identity_{label}",
                             abs(mean_entropy_change(setup) - info_gain(setup)), 1e-6))
        w = batch.W
        se_w = float(np.std(w, ddof=1) / math.sqrt(len(w)))
        jensen = jensen_bound_check(est, float(np.mean(w)), setup, se_w)
        checks.append(_check(f"jensen_bound_{label}", max(0.0, -jensen.slack), jensen.tolerance))
        rerun = run_trials(setup, n, TrialStream(config.master_seed, 1), chunk=997)
        same = np.array_equal(rerun.log_weight, batch.log_weight) and np.array_equal(rerun.f, batch.f)
        checks.append(_check(f"chunked_rerun_bit_identity_{label}", 0.0 if same else 1.0, 0.0))
        shifted = SingleMeasurementSetup(setup.protocol.shifted(3.7), setup.kernel, beta, propagator=U)
        checks.append(_check(f"energy_shift_invariance_{label}",
                             abs(xi_quadrature(shifted).xi - quad), 1e-9))
        initial_terms = max(abs(setup.coherence0), abs(setup.kl0), abs(setup.relative_entropy0))
        checks.append(_check(f"thermal_start_initial_terms_{label}", initial_terms, 1e-12))

    tpm = TwoPointSetup.build(gibbs_state(h0, beta), protocol, U)
    est = two_point_jarzynski(tpm, n, TrialStream(config.master_seed, 3))
    checks.append(_check("two_point_jarzynski", abs(est.xi), 3 * est.standard_error))
    return ValidationReport(tuple(checks))


def _ks_statistic(samples: np.ndarray, cdf) -> float:
    x = np.sort(samples)
    n = len(x)
    F = cdf(x)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def _gibbs_mpmath_residual() -> float:
    import mpmath

    levels = [-0.5, 0.25, 1.5, 4.0]
    beta = 2.2422749244920315
    H = spectral_decompose(np.diag(levels).astype(complex))
    got = gibbs_state(H, beta).populations
    with mpmath.workdps(50):
        w = [mpmath.exp(-mpmath.mpf(beta) * mpmath.mpf(e)) for e in levels]
        z = mpmath.fsum(w)
        want = [float(x / z) for x in w]
    return float(np.max(np.abs(got - np.array(want)) / np.array(want)))

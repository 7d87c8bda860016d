//! Closed-form quantities: sample complexities, covering and volume bounds,
//! small-ball concentration functions and stability constants.
//!
//! Logarithms are natural. Large powers and binomials are accumulated in log
//! space and exponentiated at the end, so results may be `inf` or `0` but
//! never spurious NaN. Failure-probability bounds may exceed one; both the
//! raw and the clamped values are reported.

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

use crate::ensembles::{ConstraintScenario, Ensemble, ScenarioKind};
use crate::error::{Error, Result};
use crate::lifting::{apply_g, mean_isometry_radius, LiftedMatrix};
use crate::spectral::norm2;

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Sample-complexity threshold `d`: `m1+m2`, `s1+m2` or `s1+s2`.
pub fn sample_complexity_d(sc: &ConstraintScenario) -> usize {
    sc.level_x() + sc.level_y()
}

/// Upper bound `2d` on the upper Minkowski dimension of `Ω_B`.
pub fn minkowski_dim_upper(sc: &ConstraintScenario) -> usize {
    2 * sample_complexity_d(sc)
}

/// `α = 1 − d/n`.
pub fn alpha(sc: &ConstraintScenario) -> f64 {
    1.0 - sample_complexity_d(sc) as f64 / sc.n as f64
}

/// `β = 1 − 2d/n`, the Hölder exponent of the inverse map under uniform stability.
pub fn beta(sc: &ConstraintScenario) -> f64 {
    1.0 - 2.0 * sample_complexity_d(sc) as f64 / sc.n as f64
}

/// Volume `π^m R^{2m} / m!` of the radius-R ball in `C^m` (`V_{C^0} = 1`).
pub fn volume_complex_ball(m: usize, radius: f64) -> Result<f64> {
    positive("R", radius)?;
    if m == 0 {
        return Ok(1.0);
    }
    let m = m as f64;
    Ok((m * PI.ln() + 2.0 * m * radius.ln() - ln_gamma(m + 1.0)).exp())
}

/// Volume `π^{m/2} R^m / Γ(m/2 + 1)` of the radius-R ball in `R^m` (`V_{R^0} = 1`).
pub fn volume_real_ball(m: usize, radius: f64) -> Result<f64> {
    positive("R", radius)?;
    if m == 0 {
        return Ok(1.0);
    }
    let m = m as f64;
    Ok((0.5 * m * PI.ln() + m * radius.ln() - ln_gamma(0.5 * m + 1.0)).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoveringKind {
    /// Unit ball of `R^m`: `(3/ρ)^m`.
    Ball,
    /// Unit-norm `s`-sparse vectors of `R^m`: `C(m,s)·(3/ρ)^s`.
    SparseBall,
}

/// Volume-argument covering bound for the real unit ball or the `s`-sparse unit vectors.
pub fn covering_bound(kind: CoveringKind, m: usize, s: Option<usize>, rho: f64) -> Result<f64> {
    positive("rho", rho)?;
    match kind {
        CoveringKind::Ball => Ok((m as f64 * (3.0 / rho).ln()).exp()),
        CoveringKind::SparseBall => {
            let s = s.ok_or_else(|| Error::InvalidParameter("sparse covering needs s".into()))?;
            if s > m {
                return Err(Error::InvalidParameter(format!("s = {s} exceeds m = {m}")));
            }
            Ok((ln_binomial(m as u64, s as u64) + s as f64 * (3.0 / rho).ln()).exp())
        }
    }
}

/// Complex set from its real and imaginary parts: `N_Ω(√2ρ) ≤ N_Re(ρ)·N_Im(ρ)`.
/// Returns the bound on `N_Ω(rho)` given a covering-number bound of the parts.
pub fn covering_from_real_imag(rho: f64, parts: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let r = rho / 2f64.sqrt();
    Ok(parts(r)? * parts(r)?)
}

/// Rank-1 products of sets inside the unit ball: `N_{Ω_M}(2ρ) ≤ N_X(ρ)·N_Y(ρ)`.
pub fn covering_product(rho: f64, nx: impl Fn(f64) -> Result<f64>, ny: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    Ok(nx(rho / 2.0)? * ny(rho / 2.0)?)
}

/// Set difference: `N_{X−Y}(2ρ) ≤ N_X(ρ)·N_Y(ρ)`.
pub fn covering_difference(rho: f64, nx: impl Fn(f64) -> Result<f64>, ny: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    Ok(nx(rho / 2.0)? * ny(rho / 2.0)?)
}

/// Covering bound of `Ω_X ∩ B_{C^{m1}}` (real/imaginary split of the volume bound).
pub fn covering_signal_set(sc: &ConstraintScenario, rho: f64) -> Result<f64> {
    Ok(ln_covering_complex(sc.m1, sc.level_x(), rho)?.exp())
}

pub fn covering_filter_set(sc: &ConstraintScenario, rho: f64) -> Result<f64> {
    Ok(ln_covering_complex(sc.m2, sc.level_y(), rho)?.exp())
}

fn ln_covering_part(m: usize, s: usize, rho: f64) -> Result<f64> {
    positive("rho", rho)?;
    let ln_supports = if s == m { 0.0 } else { ln_binomial(m as u64, s as u64) };
    Ok(ln_supports + s as f64 * (3.0 / rho).ln())
}

fn ln_covering_complex(m: usize, s: usize, rho: f64) -> Result<f64> {
    Ok(2.0 * ln_covering_part(m, s, rho / 2f64.sqrt())?)
}

fn ln_covering_omega_b(sc: &ConstraintScenario, rho: f64) -> Result<f64> {
    Ok(ln_covering_complex(sc.m1, sc.level_x(), rho / 2.0)? + ln_covering_complex(sc.m2, sc.level_y(), rho / 2.0)?)
}

/// Covering bound of `Ω_B = {xyᵀ : x ∈ Ω_X ∩ B, y ∈ Ω_Y ∩ B}`; for subspace
/// constraints this is `(6√2/ρ)^{2(m1+m2)}`.
pub fn covering_omega_b(sc: &ConstraintScenario, rho: f64) -> Result<f64> {
    Ok(ln_covering_omega_b(sc, rho)?.exp())
}

/// `log N(ρ) / log(1/ρ)` for the `Ω_B` covering bound; tends to `2d` as `ρ → 0`.
pub fn dimension_ratio(sc: &ConstraintScenario, rho: f64) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidParameter(format!("rho must lie in (0, 1), got {rho}")));
    }
    Ok(ln_covering_omega_b(sc, rho)? / (1.0 / rho).ln())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Real,
    Complex,
}

fn check_small_ball(rho: f64, ell: f64, upper: f64, radius: f64, m1: usize, m2: usize) -> Result<()> {
    positive("rho", rho)?;
    positive("ell", ell)?;
    positive("L", upper)?;
    positive("R", radius)?;
    if ell > upper {
        return Err(Error::InvalidParameter(format!("ell = {ell} exceeds L = {upper}")));
    }
    if m1 == 0 || m2 == 0 {
        return Err(Error::InvalidParameter("m1 and m2 must be positive".into()));
    }
    Ok(())
}

/// Real concentration function
/// `f = 4·V_{R^{m1−1}}V_{R^{m2−1}} / (ℓ·V_{R^{m1}}V_{R^{m2}}) · (1 + ln(LR²/ρ))`.
pub fn concentration_f(rho: f64, ell: f64, upper: f64, radius: f64, m1: usize, m2: usize) -> Result<f64> {
    check_small_ball(rho, ell, upper, radius, m1, m2)?;
    let ratio = volume_real_ball(m1 - 1, radius)? * volume_real_ball(m2 - 1, radius)?
        / (volume_real_ball(m1, radius)? * volume_real_ball(m2, radius)?);
    Ok(4.0 * ratio / ell * (1.0 + (upper * radius * radius / rho).ln()))
}

/// Complex concentration function
/// `g = π²·V_{C^{m1−1}}V_{C^{m2−1}} / (ℓ²·V_{C^{m1}}V_{C^{m2}}) · (1 + 2 ln(LR²/ρ))`.
pub fn concentration_g(rho: f64, ell: f64, upper: f64, radius: f64, m1: usize, m2: usize) -> Result<f64> {
    check_small_ball(rho, ell, upper, radius, m1, m2)?;
    let ratio = volume_complex_ball(m1 - 1, radius)? * volume_complex_ball(m2 - 1, radius)?
        / (volume_complex_ball(m1, radius)? * volume_complex_ball(m2, radius)?);
    Ok(PI * PI * ratio / (ell * ell) * (1.0 + 2.0 * (upper * radius * radius / rho).ln()))
}

/// Small-ball bound on `P[|aᵀMb| ≤ ρ]` (real, `ρ·f`) or `P[|a*M b̄| ≤ ρ]` (complex, `ρ²·g`)
/// for `ℓ ≤ ‖M‖₂ ≤ L` and `a`, `b` uniform on radius-R balls.
pub fn small_ball_bound(field: Field, rho: f64, ell: f64, upper: f64, radius: f64, m1: usize, m2: usize) -> Result<f64> {
    match field {
        Field::Real => Ok(rho * concentration_f(rho, ell, upper, radius, m1, m2)?),
        Field::Complex => Ok(rho * rho * concentration_g(rho, ell, upper, radius, m1, m2)?),
    }
}

/// `C = 648·m1·m2·(1 + 2 ln(2√n R² / (3δ)))`, with `δ` measured on `G`.
pub fn constant_c(n: usize, m1: usize, m2: usize, radius: f64, delta: f64) -> f64 {
    648.0 * (m1 * m2) as f64 * (1.0 + 2.0 * (2.0 * (n as f64).sqrt() * radius * radius / (3.0 * delta)).ln())
}

/// Frequency-domain form `648·m1·m2·(1 + 2 ln(2R² / (3δ)))`, with `δ` measured on `A`.
/// Equal to [`constant_c`] under `δ_A = δ/√n`.
pub fn constant_c_frequency(m1: usize, m2: usize, radius: f64, delta_a: f64) -> f64 {
    648.0 * (m1 * m2) as f64 * (1.0 + 2.0 * (2.0 * radius * radius / (3.0 * delta_a)).ln())
}

/// Failure-probability bound on `A` for subspace constraints with `δ` on `A`:
/// `(648 m1m2 (1 + 2 ln(2R²/(3δ))))^n (δ²/R⁴)^{n−m1−m2} ε^{−2n}`.
pub fn failure_bound_frequency(n: usize, m1: usize, m2: usize, radius: f64, delta_a: f64, epsilon: f64) -> f64 {
    let c = constant_c_frequency(m1, m2, radius, delta_a);
    let k = n as f64 - (m1 + m2) as f64;
    signed_exp(
        c.signum().powi(n as i32),
        n as f64 * c.abs().ln() + k * (delta_a * delta_a / radius.powi(4)).ln() - 2.0 * n as f64 * epsilon.ln(),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityMode {
    SinglePoint,
    Uniform,
}

impl std::str::FromStr for StabilityMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single_point" | "single" => Ok(Self::SinglePoint),
            "uniform" => Ok(Self::Uniform),
            other => Err(Error::InvalidParameter(format!("unknown stability mode `{other}`"))),
        }
    }
}

fn check_theorem_hypothesis(sc: &ConstraintScenario, mode: StabilityMode) -> Result<()> {
    let d = sample_complexity_d(sc);
    match mode {
        StabilityMode::SinglePoint if sc.n <= d => Err(Error::Precondition(format!(
            "single-point stability requires n > d (n = {}, d = {d})",
            sc.n
        ))),
        StabilityMode::Uniform if sc.n <= 2 * d => Err(Error::Precondition(format!(
            "uniform stability requires n > 2d (n = {}, 2d = {})",
            sc.n,
            2 * d
        ))),
        _ => Ok(()),
    }
}

/// log of the binomial multiplier: 2 or 4 powers of `C(m1,s1)` and `C(m2,s2)`.
fn ln_binomial_multiplier(sc: &ConstraintScenario, power: f64) -> f64 {
    let lx = match sc.kind {
        ScenarioKind::Subspace => 0.0,
        _ => ln_binomial(sc.m1 as u64, sc.level_x() as u64),
    };
    let ly = match sc.kind {
        ScenarioKind::Sparsity => ln_binomial(sc.m2 as u64, sc.level_y() as u64),
        _ => 0.0,
    };
    power * (lx + ly)
}

fn signed_exp(sign: f64, ln_abs: f64) -> f64 {
    if sign == 0.0 {
        0.0
    } else {
        sign * ln_abs.exp()
    }
}

/// Signed log-magnitude of a stability constant.
#[derive(Clone, Copy, Debug, PartialEq)]
struct LogValue {
    sign: f64,
    ln_abs: f64,
}

impl LogValue {
    fn value(self) -> f64 {
        signed_exp(self.sign, self.ln_abs)
    }
}

fn ln_stability_constant(sc: &ConstraintScenario, mode: StabilityMode, radius: f64, delta: f64) -> LogValue {
    let n = sc.n as f64;
    let d = sample_complexity_d(sc) as f64;
    let c = constant_c(sc.n, sc.m1, sc.m2, radius, delta);
    let sign = if c == 0.0 { 0.0 } else { c.signum().powi(sc.n as i32) };
    match mode {
        StabilityMode::SinglePoint => LogValue {
            sign,
            ln_abs: ln_binomial_multiplier(sc, 2.0) + n * c.abs().ln() - (n - d) * n.ln(),
        },
        StabilityMode::Uniform => LogValue {
            sign,
            ln_abs: ln_binomial_multiplier(sc, 4.0) + n * (4.0 * c.abs()).ln() - (n - 2.0 * d) * n.ln(),
        },
    }
}

/// `C′` (single point) or `C″` (uniform) for the scenario, per the table of constants.
pub fn stability_constant(sc: &ConstraintScenario, mode: StabilityMode, radius: f64, delta: f64) -> Result<f64> {
    positive("R", radius)?;
    positive("delta", delta)?;
    Ok(ln_stability_constant(sc, mode, radius, delta).value())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureBound {
    pub raw: f64,
    pub clamped: f64,
}

impl FailureBound {
    fn from_raw(raw: f64) -> Self {
        let clamped = if raw.is_nan() { 1.0 } else { raw.clamp(0.0, 1.0) };
        Self { raw, clamped }
    }
}

/// `C′(δ²/R⁴)^{n−d}(1/ε²)^n` (single point) or `C″(δ²/R⁴)^{n−2d}(1/ε²)^n` (uniform).
pub fn failure_prob_bound(
    sc: &ConstraintScenario,
    mode: StabilityMode,
    radius: f64,
    delta: f64,
    epsilon: f64,
) -> Result<FailureBound> {
    check_theorem_hypothesis(sc, mode)?;
    positive("R", radius)?;
    positive("delta", delta)?;
    positive("epsilon", epsilon)?;
    let n = sc.n as f64;
    let d = sample_complexity_d(sc) as f64;
    let k = match mode {
        StabilityMode::SinglePoint => n - d,
        StabilityMode::Uniform => n - 2.0 * d,
    };
    let constant = ln_stability_constant(sc, mode, radius, delta);
    let ln_abs = constant.ln_abs + k * (delta * delta / radius.powi(4)).ln() - 2.0 * n * epsilon.ln();
    Ok(FailureBound::from_raw(signed_exp(constant.sign, ln_abs)))
}

/// `ε(δ) = C′^{1/(2n)}(δ/R²)^{α/2}` (single point) or `2·C″^{1/(2n)}(δ/R²)^β` (uniform),
/// given the value of the constant.
pub fn epsilon_of_delta(
    sc: &ConstraintScenario,
    mode: StabilityMode,
    radius: f64,
    delta: f64,
    c_value: f64,
) -> Result<f64> {
    check_theorem_hypothesis(sc, mode)?;
    positive("R", radius)?;
    positive("constant", c_value)?;
    if !(delta >= 0.0) {
        return Err(Error::InvalidParameter(format!("delta must be nonnegative, got {delta}")));
    }
    let root = c_value.powf(1.0 / (2.0 * sc.n as f64));
    let base = delta / (radius * radius);
    Ok(match mode {
        StabilityMode::SinglePoint => root * base.powf(alpha(sc) / 2.0),
        StabilityMode::Uniform => 2.0 * root * base.powf(beta(sc)),
    })
}

/// `ε(δ)` with the constant evaluated from the table at the same `δ` (log space).
/// At `δ = 0` this is the limit value 0.
pub fn epsilon_for(sc: &ConstraintScenario, mode: StabilityMode, radius: f64, delta: f64) -> Result<f64> {
    check_theorem_hypothesis(sc, mode)?;
    positive("R", radius)?;
    if delta == 0.0 {
        return Ok(0.0);
    }
    positive("delta", delta)?;
    let constant = ln_stability_constant(sc, mode, radius, delta);
    if constant.sign <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "stability constant is not positive at delta = {delta}"
        )));
    }
    let ln_root = constant.ln_abs / (2.0 * sc.n as f64);
    let ln_base = (delta / (radius * radius)).ln();
    Ok(match mode {
        StabilityMode::SinglePoint => (ln_root + alpha(sc) / 2.0 * ln_base).exp(),
        StabilityMode::Uniform => 2.0 * (ln_root + beta(sc) * ln_base).exp(),
    })
}

/// Reconstruction and measurement signal-to-noise ratios.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnrMetrics {
    /// `‖M0‖_F² / ‖M − M0‖_F²`; `+inf` when `M = M0`.
    pub rsnr: f64,
    /// `‖G(M0)‖² / ‖G(M) − G(M0)‖²`; `+inf` when the measurements coincide.
    pub msnr: f64,
}

pub fn snr_metrics(m0: &LiftedMatrix, m: &LiftedMatrix, ens: &Ensemble) -> Result<SnrMetrics> {
    let diff = LiftedMatrix::from_matrix(m.matrix() - m0.matrix())?;
    let ratio = |num: f64, den: f64| if den == 0.0 { f64::INFINITY } else { num / den };
    let g0 = apply_g(ens, m0)?;
    let gd = apply_g(ens, &diff)?;
    Ok(SnrMetrics {
        rsnr: ratio(m0.frobenius_norm().powi(2), diff.frobenius_norm().powi(2)),
        msnr: ratio(norm2(&g0).powi(2), norm2(&gd).powi(2)),
    })
}

/// Inputs of a bound evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundQuery {
    pub scenario: ConstraintScenario,
    pub delta: f64,
    pub epsilon: f64,
    /// Ball radius; `None` selects the mean-isometry radius.
    pub radius: Option<f64>,
    pub rho: f64,
    pub ell: f64,
    pub upper: f64,
    pub sigma: f64,
}

impl BoundQuery {
    pub fn new(scenario: ConstraintScenario) -> Self {
        Self { scenario, delta: 0.1, epsilon: 1.0, radius: None, rho: 0.1, ell: 1.0, upper: 1.0, sigma: 1.0 }
    }

    pub fn resolved_radius(&self) -> f64 {
        self.radius
            .unwrap_or_else(|| mean_isometry_radius(self.scenario.n, self.scenario.m1, self.scenario.m2))
    }

    fn validate(&self) -> Result<()> {
        self.scenario.validate_structure()?;
        for (name, v) in [
            ("delta", self.delta),
            ("epsilon", self.epsilon),
            ("rho", self.rho),
            ("ell", self.ell),
            ("L", self.upper),
            ("sigma", self.sigma),
            ("R", self.resolved_radius()),
        ] {
            positive(name, v)?;
        }
        if self.ell > self.upper {
            return Err(Error::InvalidParameter(format!("ell = {} exceeds L = {}", self.ell, self.upper)));
        }
        Ok(())
    }
}

/// Everything the closed forms say about one query. Fields whose theorem
/// hypothesis fails (n ≤ d, n ≤ 2d) are `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub kind: ScenarioKind,
    pub n: usize,
    pub d: usize,
    pub two_d: usize,
    pub minkowski_dim_upper: usize,
    pub radius: f64,
    pub alpha: f64,
    pub beta: Option<f64>,
    pub c: f64,
    pub c_prime: f64,
    pub c_dblprime: f64,
    pub weak_failure_bound: Option<f64>,
    pub weak_failure_bound_raw: Option<f64>,
    pub uniform_failure_bound: Option<f64>,
    pub uniform_failure_bound_raw: Option<f64>,
    pub epsilon_single: Option<f64>,
    pub epsilon_uniform: Option<f64>,
    /// `σ·ε(δ/σ)`: single-point error radius on `σΩ_B`.
    pub epsilon_single_scaled: Option<f64>,
    pub small_ball_complex: f64,
    pub small_ball_real: f64,
    pub covering_x: f64,
    pub covering_y: f64,
    pub covering_omega_b: f64,
    pub volume_x: f64,
    pub volume_y: f64,
}

pub fn evaluate(query: &BoundQuery) -> Result<BoundReport> {
    query.validate()?;
    let sc = &query.scenario;
    let radius = query.resolved_radius();
    let d = sample_complexity_d(sc);
    let single_ok = sc.n > d;
    let uniform_ok = sc.n > 2 * d;
    let weak = single_ok
        .then(|| failure_prob_bound(sc, StabilityMode::SinglePoint, radius, query.delta, query.epsilon))
        .transpose()?;
    let uniform = uniform_ok
        .then(|| failure_prob_bound(sc, StabilityMode::Uniform, radius, query.delta, query.epsilon))
        .transpose()?;
    let eps = |mode, delta| epsilon_for(sc, mode, radius, delta).ok();
    let (m1, m2) = (sc.m1, sc.m2);
    Ok(BoundReport {
        kind: sc.kind,
        n: sc.n,
        d,
        two_d: 2 * d,
        minkowski_dim_upper: minkowski_dim_upper(sc),
        radius,
        alpha: alpha(sc),
        beta: uniform_ok.then(|| beta(sc)),
        c: constant_c(sc.n, m1, m2, radius, query.delta),
        c_prime: stability_constant(sc, StabilityMode::SinglePoint, radius, query.delta)?,
        c_dblprime: stability_constant(sc, StabilityMode::Uniform, radius, query.delta)?,
        weak_failure_bound: weak.map(|b| b.clamped),
        weak_failure_bound_raw: weak.map(|b| b.raw),
        uniform_failure_bound: uniform.map(|b| b.clamped),
        uniform_failure_bound_raw: uniform.map(|b| b.raw),
        epsilon_single: single_ok.then(|| eps(StabilityMode::SinglePoint, query.delta)).flatten(),
        epsilon_uniform: uniform_ok.then(|| eps(StabilityMode::Uniform, query.delta)).flatten(),
        epsilon_single_scaled: single_ok
            .then(|| eps(StabilityMode::SinglePoint, query.delta / query.sigma).map(|e| query.sigma * e))
            .flatten(),
        small_ball_complex: small_ball_bound(Field::Complex, query.rho, query.ell, query.upper, radius, m1, m2)?,
        small_ball_real: small_ball_bound(Field::Real, query.rho, query.ell, query.upper, radius, m1, m2)?,
        covering_x: covering_signal_set(sc, query.rho)?,
        covering_y: covering_filter_set(sc, query.rho)?,
        covering_omega_b: covering_omega_b(sc, query.rho)?,
        volume_x: volume_complex_ball(m1, radius)?,
        volume_y: volume_complex_ball(m2, radius)?,
    })
}

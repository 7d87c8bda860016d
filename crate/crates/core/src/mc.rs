//! Seeded Monte-Carlo experiments: small-ball probabilities, the mean-isometry
//! check, identifiability phase transitions and stability sweeps.
//!
//! Trial `t` of sweep point `p` draws everything from
//! `mix_seed(mix_seed(master_seed, p), t)`. Trials run on the current rayon
//! pool and are aggregated in trial order, so results do not depend on the
//! number of worker threads.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    concentration_g, epsilon_for, failure_prob_bound, sample_complexity_d, small_ball_bound, Field, StabilityMode,
};
use crate::ensembles::{complex_gaussian, sample_uniform_complex_ball, CMatrix, CVector, ConstraintScenario, Ensemble, EnsembleTag};
use crate::error::{Error, Result};
use crate::lifting::{apply_a_raw, apply_gram_g, mean_isometry_radius, measure, operator_matrix, LiftedMatrix};
use crate::recovery::{align_and_distance, solve_scenario, success_threshold};
use crate::rng::{mix_seed, rng_from_seed, splitmix64, LabRng};

/// Minimum trial count for small-ball estimates.
pub const MIN_SMALL_BALL_TRIALS: usize = 1000;
/// Slack added to `δ` when testing measurement proximity.
pub const FEASIBILITY_SLACK: f64 = 1e-10;

/// Seed for trial `trial` of sweep point `point`.
pub fn trial_seed(master: u64, point: u64, trial: u64) -> u64 {
    mix_seed(mix_seed(master, point), trial)
}

fn trial_rngs(master: u64, point: u64, trial: u64) -> (u64, LabRng) {
    let seed = trial_seed(master, point, trial);
    (seed, rng_from_seed(splitmix64(seed)))
}

/// Values swept by an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sweep {
    N(Vec<usize>),
    Delta(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialPlan {
    pub scenario: ConstraintScenario,
    pub ensemble: EnsembleTag,
    pub trials: usize,
    pub restarts: usize,
    /// `‖e‖₂` of the measurement noise (so `δ = 2‖e‖₂`); transitions only.
    pub noise_level: f64,
    pub master_seed: u64,
    pub sweep: Sweep,
    pub mode: StabilityMode,
}

impl TrialPlan {
    pub fn new(scenario: ConstraintScenario, ensemble: EnsembleTag, trials: usize, master_seed: u64, sweep: Sweep) -> Self {
        Self {
            scenario,
            ensemble,
            trials,
            restarts: 20,
            noise_level: 0.0,
            master_seed,
            sweep,
            mode: StabilityMode::SinglePoint,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if !(self.noise_level >= 0.0 && self.noise_level.is_finite()) {
            return Err(Error::InvalidParameter(format!("noise level must be nonnegative, got {}", self.noise_level)));
        }
        self.scenario.validate_structure()
    }
}

/// Rank-1 matrix on a uniformly chosen admissible support with Gaussian factors
/// of unit norm each, so `‖M‖_F = 1`.
pub fn plant_rank_one<R: Rng + ?Sized>(sc: &ConstraintScenario, real: bool, rng: &mut R) -> Result<LiftedMatrix> {
    let xs = sc.supports_x();
    let ys = sc.supports_y();
    let s1 = &xs[rng.random_range(0..xs.len())];
    let s2 = &ys[rng.random_range(0..ys.len())];
    let mut draw = |m: usize, s: &[usize]| {
        let mut v = CVector::zeros(m);
        loop {
            for &k in s {
                v[k] = if real {
                    Complex64::new(rand_distr::Distribution::sample(&rand_distr::StandardNormal, rng), 0.0)
                } else {
                    complex_gaussian(rng, 1.0)
                };
            }
            let norm = v.norm();
            if norm > 0.0 {
                return v / Complex64::new(norm, 0.0);
            }
        }
    };
    let x = draw(sc.m1, s1);
    let y = draw(sc.m2, s2);
    LiftedMatrix::from_factors(x, y)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmallBallEstimate {
    pub p_hat: f64,
    pub std_err: f64,
    pub trials: usize,
}

/// Empirical `P[|a^* M conj(b)| ≤ ρ]` for `a`, `b` uniform on radius-R complex balls,
/// with binomial standard error `√(p̂(1−p̂)/T)`.
pub fn estimate_small_ball_prob<R: Rng + ?Sized>(
    m: &LiftedMatrix,
    radius: f64,
    rho: f64,
    trials: usize,
    rng: &mut R,
) -> Result<SmallBallEstimate> {
    if m.frobenius_norm() == 0.0 {
        return Err(Error::ZeroFactors);
    }
    if trials < MIN_SMALL_BALL_TRIALS {
        return Err(Error::InvalidParameter(format!("at least {MIN_SMALL_BALL_TRIALS} trials required, got {trials}")));
    }
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter(format!("rho must be positive, got {rho}")));
    }
    let (m1, m2) = m.shape();
    let mut hits = 0usize;
    for _ in 0..trials {
        let a = sample_uniform_complex_ball(m1, radius, rng)?;
        let b = sample_uniform_complex_ball(m2, radius, rng)?;
        let v = (a.adjoint() * m.matrix() * b.conjugate())[(0, 0)];
        hits += usize::from(v.norm() <= rho);
    }
    let p = hits as f64 / trials as f64;
    Ok(SmallBallEstimate { p_hat: p, std_err: (p * (1.0 - p) / trials as f64).sqrt(), trials })
}

/// `ρ²(1 + 2 ln(1/ρ))` for `ρ ≤ 1`: the exact small-ball probability when
/// `m1 = m2 = 1`, `M = [1]`, `R = 1`, since `|a|²` and `|b|²` are independent uniform.
pub fn scalar_small_ball_exact(rho: f64) -> f64 {
    if rho >= 1.0 {
        1.0
    } else {
        rho * rho * (1.0 + 2.0 * (1.0 / rho).ln())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmallBallRow {
    pub case: usize,
    pub m1: usize,
    pub m2: usize,
    pub rho: f64,
    /// `ℓ = L = ‖M‖₂`.
    pub spectral_norm: f64,
    pub trials: usize,
    pub p_hat: f64,
    pub std_err: f64,
    /// `ρ²·g(ρ, ℓ, L, R)`.
    pub bound: f64,
    /// Closed-form probability, when known.
    pub exact: Option<f64>,
}

impl SmallBallRow {
    /// `p̂ ≤ bound + 3·SE`.
    pub fn within_bound(&self) -> bool {
        self.p_hat <= self.bound + 3.0 * self.std_err
    }

    /// `|p̂ − exact| ≤ 3·SE`, when the exact value is known.
    pub fn matches_exact(&self) -> Option<bool> {
        self.exact.map(|e| (self.p_hat - e).abs() <= 3.0 * self.std_err)
    }
}

/// Small-ball estimates for the scalar case `M = [1]`, `R = 1`, one row per `ρ`.
pub fn run_small_ball_sharp(rhos: &[f64], trials: usize, master_seed: u64) -> Result<Vec<SmallBallRow>> {
    let one = LiftedMatrix::from_matrix(CMatrix::from_element(1, 1, Complex64::new(1.0, 0.0)))?;
    rhos.par_iter()
        .enumerate()
        .map(|(i, &rho)| {
            let (_, mut rng) = trial_rngs(master_seed, i as u64, 0);
            let est = estimate_small_ball_prob(&one, 1.0, rho, trials, &mut rng)?;
            Ok(SmallBallRow {
                case: i,
                m1: 1,
                m2: 1,
                rho,
                spectral_norm: 1.0,
                trials,
                p_hat: est.p_hat,
                std_err: est.std_err,
                bound: small_ball_bound(Field::Complex, rho, 1.0, 1.0, 1.0, 1, 1)?,
                exact: Some(scalar_small_ball_exact(rho)),
            })
        })
        .collect()
}

/// `cases` random complex Gaussian `M` with `1 ≤ m1, m2 ≤ max_dim`, each
/// estimated at every `ρ` with `R = 1` and `ℓ = L = ‖M‖₂`.
pub fn run_small_ball_grid(
    cases: usize,
    max_dim: usize,
    rhos: &[f64],
    trials: usize,
    master_seed: u64,
) -> Result<Vec<SmallBallRow>> {
    if max_dim == 0 {
        return Err(Error::InvalidParameter("max_dim must be positive".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..cases).flat_map(|c| (0..rhos.len()).map(move |r| (c, r))).collect();
    jobs.par_iter()
        .map(|&(case, ri)| {
            let (_, mut draw) = trial_rngs(master_seed, case as u64, 0);
            let m1 = draw.random_range(1..=max_dim);
            let m2 = draw.random_range(1..=max_dim);
            let m = LiftedMatrix::from_matrix(CMatrix::from_fn(m1, m2, |_, _| complex_gaussian(&mut draw, 1.0)))?;
            let norm = m.spectral_norm();
            let rho = rhos[ri];
            let (_, mut rng) = trial_rngs(master_seed, case as u64, 1 + ri as u64);
            let est = estimate_small_ball_prob(&m, 1.0, rho, trials, &mut rng)?;
            Ok(SmallBallRow {
                case,
                m1,
                m2,
                rho,
                spectral_norm: norm,
                trials,
                p_hat: est.p_hat,
                std_err: est.std_err,
                bound: rho * rho * concentration_g(rho, norm, norm, 1.0, m1, m2)?,
                exact: None,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanIsometryRow {
    pub n: usize,
    pub m1: usize,
    pub m2: usize,
    pub radius: f64,
    pub trials: usize,
    /// `‖avg G*G(M) − M‖_F / ‖M‖_F` for a fixed unit-norm `M`.
    pub relative_error: f64,
}

/// Averages `G*G(M)` over `trials` ensembles with rows uniform on the radius-R
/// complex ball; `radius = None` uses [`mean_isometry_radius`].
pub fn run_mean_isometry(
    n: usize,
    m1: usize,
    m2: usize,
    radius: Option<f64>,
    trials: usize,
    master_seed: u64,
) -> Result<MeanIsometryRow> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let radius = radius.unwrap_or_else(|| mean_isometry_radius(n, m1, m2));
    let sc = ConstraintScenario::probe(crate::ensembles::ScenarioKind::Subspace, n, m1, m2, None, None)?;
    let mut rng = rng_from_seed(master_seed);
    let m = LiftedMatrix::from_matrix(CMatrix::from_fn(m1, m2, |_, _| complex_gaussian(&mut rng, 1.0)))?;
    let m = m.scaled(1.0 / m.frobenius_norm());
    let tag = EnsembleTag::ComplexUniformBall { radius };
    let grams: Vec<Result<CMatrix>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let ens = Ensemble::generate(&sc, tag, trial_seed(master_seed, 0, t as u64))?;
            Ok(apply_gram_g(&ens, &m)?.into_matrix())
        })
        .collect();
    let mut sum = CMatrix::zeros(m1, m2);
    for g in grams {
        sum += g?;
    }
    let avg = sum / Complex64::new(trials as f64, 0.0);
    Ok(MeanIsometryRow { n, m1, m2, radius, trials, relative_error: (avg - m.matrix()).norm() / m.frobenius_norm() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionRow {
    pub n: usize,
    pub trials: usize,
    pub successes: usize,
    pub rate: f64,
    pub d: usize,
    pub two_d: usize,
    pub mean_lifted_error: f64,
}

/// Identifiability phase transition: for each `n`, plant a unit-norm rank-1
/// `M0`, measure it (with noise of norm `noise_level`), solve, and count
/// recoveries within the success threshold.
pub fn run_phase_transition(plan: &TrialPlan) -> Result<Vec<TransitionRow>> {
    plan.validate()?;
    let Sweep::N(ns) = &plan.sweep else {
        return Err(Error::InvalidParameter("phase transition sweeps over n".into()));
    };
    let real = plan.ensemble.is_real();
    ns.iter()
        .map(|&n| {
            let sc = plan.scenario.with_n(n)?;
            let outcomes: Vec<Result<(bool, f64)>> = (0..plan.trials)
                .into_par_iter()
                .map(|t| {
                    let (seed, mut rng) = trial_rngs(plan.master_seed, n as u64, t as u64);
                    let ens = Ensemble::generate(&sc, plan.ensemble, seed)?;
                    let m0 = plant_rank_one(&sc, real, &mut rng)?;
                    let rec = measure(&ens, &m0, plan.noise_level, &mut rng)?;
                    let res = solve_scenario(&ens, &rec.z_tilde, &sc, plan.restarts, &mut rng)?;
                    let err = align_and_distance(&res.m_hat, &m0)?;
                    Ok((err <= success_threshold(&m0), err))
                })
                .collect();
            let mut successes = 0;
            let mut total_err = 0.0;
            for o in outcomes {
                let (ok, err) = o?;
                successes += usize::from(ok);
                total_err += err;
            }
            let d = sample_complexity_d(&sc);
            Ok(TransitionRow {
                n,
                trials: plan.trials,
                successes,
                rate: successes as f64 / plan.trials as f64,
                d,
                two_d: 2 * d,
                mean_lifted_error: total_err / plan.trials as f64,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub delta: f64,
    pub trials: usize,
    /// Trials where a measurement-feasible `M` was found with `‖M − M0‖_F > ε(δ)`.
    pub violations: usize,
    pub violation_rate: f64,
    pub epsilon: f64,
    pub failure_bound: f64,
    pub failure_bound_raw: f64,
    /// Mean over trials of the largest distance found.
    pub mean_distance: f64,
    pub max_distance: f64,
}

/// Least-squares slope of `ln(max_distance)` against `ln δ` over rows with
/// `δ > 0` and a positive distance; `None` with fewer than two such rows.
pub fn scaling_slope(rows: &[StabilityRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.delta > 0.0 && r.max_distance > 0.0)
        .map(|r| (r.delta.ln(), r.max_distance.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Stability sweep. For each `δ`, every trial draws a uniform-ball ensemble and a
/// planted `M0 ∈ Ω_B` with `‖M0‖_F = 1`, then searches for constrained
/// `M ∈ Ω_B` with `‖G(M − M0)‖₂ ≤ δ` as far from `M0` as possible:
/// a noisy solve (noise uniform on the sphere of radius `δ/2`) and line searches
/// along the least-observed tangent directions of the rank-1 set at `M0` plus
/// `restarts` random tangent directions. At `δ = 0` the search is a multi-start
/// noiseless solve. The search only exhibits feasible points, so the observed
/// violation rate is a lower estimate of the true one.
pub fn run_stability_sweep(plan: &TrialPlan) -> Result<Vec<StabilityRow>> {
    plan.validate()?;
    let Sweep::Delta(deltas) = &plan.sweep else {
        return Err(Error::InvalidParameter("stability sweep runs over delta".into()));
    };
    let radius = match plan.ensemble {
        EnsembleTag::ComplexUniformBall { radius } => radius,
        other => {
            return Err(Error::InvalidParameter(format!(
                "stability sweeps need a complex uniform-ball ensemble, got {}",
                other.name()
            )))
        }
    };
    let sc = &plan.scenario;
    // hypothesis of the selected mode
    epsilon_for(sc, plan.mode, radius, 0.0)?;
    deltas
        .iter()
        .enumerate()
        .map(|(i, &delta)| {
            if !(delta >= 0.0 && delta.is_finite()) {
                return Err(Error::InvalidParameter(format!("delta must be nonnegative, got {delta}")));
            }
            let epsilon = epsilon_for(sc, plan.mode, radius, delta)?;
            let bound = if delta == 0.0 {
                None
            } else {
                Some(failure_prob_bound(sc, plan.mode, radius, delta, epsilon)?)
            };
            let threshold = epsilon.max(1e-6);
            let worst: Vec<Result<f64>> = (0..plan.trials)
                .into_par_iter()
                .map(|t| {
                    let (seed, mut rng) = trial_rngs(plan.master_seed, i as u64, t as u64);
                    let ens = Ensemble::generate(sc, plan.ensemble, seed)?;
                    let m0 = plant_rank_one(sc, false, &mut rng)?;
                    worst_feasible_distance(&ens, sc, &m0, delta, plan.restarts, &mut rng)
                })
                .collect();
            let mut violations = 0;
            let (mut sum, mut max) = (0.0, 0.0f64);
            for w in worst {
                let w = w?;
                violations += usize::from(w > threshold);
                sum += w;
                max = max.max(w);
            }
            Ok(StabilityRow {
                delta,
                trials: plan.trials,
                violations,
                violation_rate: violations as f64 / plan.trials as f64,
                epsilon,
                failure_bound: bound.map_or(0.0, |b| b.clamped),
                failure_bound_raw: bound.map_or(0.0, |b| b.raw),
                mean_distance: sum / plan.trials as f64,
                max_distance: max,
            })
        })
        .collect()
}

fn g_distance(ens: &Ensemble, m: &CMatrix, m0: &CMatrix) -> f64 {
    (ens.n() as f64).sqrt() * (apply_a_raw(ens, &(m - m0))).norm()
}

/// Nearest rank-1 matrix inside the unit Frobenius ball.
fn project_omega_b(m: &CMatrix) -> CMatrix {
    let svd = m.clone().svd(true, true);
    let k = svd.singular_values.imax();
    let s = svd.singular_values[k].min(1.0);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    u.column(k) * vt.row(k) * Complex64::new(s, 0.0)
}

fn support_of(v: &CVector) -> Vec<usize> {
    v.iter().enumerate().filter(|(_, c)| c.norm() > 0.0).map(|(i, _)| i).collect()
}

/// Largest `‖M − M0‖_F` found among `M ∈ Ω_B` with `‖G(M − M0)‖₂ ≤ δ`.
fn worst_feasible_distance(
    ens: &Ensemble,
    sc: &ConstraintScenario,
    m0: &LiftedMatrix,
    delta: f64,
    restarts: usize,
    rng: &mut LabRng,
) -> Result<f64> {
    let limit = delta + FEASIBILITY_SLACK;
    let m0m = m0.matrix();
    let mut worst = 0.0f64;
    let mut consider = |m: &CMatrix| {
        if g_distance(ens, m, m0m) <= limit {
            worst = worst.max((m - m0m).norm());
        }
    };

    let rec = measure(ens, m0, delta / 2.0, rng)?;
    let solved = solve_scenario(ens, &rec.z_tilde, sc, restarts, rng)?;
    let mut m_hat = solved.m_hat.into_matrix();
    let norm = m_hat.norm();
    if norm > 1.0 {
        m_hat /= Complex64::new(norm, 0.0);
    }
    consider(&m_hat);
    if delta == 0.0 {
        return Ok(worst);
    }

    let (x0, y0) = m0.factors().ok_or(Error::ZeroFactors)?;
    let (s1, s2) = (support_of(x0), support_of(y0));
    let directions = tangent_directions(ens, x0, y0, &s1, &s2, restarts, rng);
    for dir in directions {
        for sign in [1.0, -1.0] {
            let d = &dir * Complex64::new(sign, 0.0);
            let path = |t: f64| project_omega_b(&(m0m + &d * Complex64::new(t, 0.0)));
            if let Some(m) = farthest_on_path(ens, m0m, &path, delta, limit) {
                consider(&m);
            }
        }
    }
    Ok(worst)
}

/// Orthonormal tangent directions of the rank-1 set at `x0·y0ᵀ` (restricted to
/// the support), ordered from least to most observed by `G`, followed by random
/// tangent combinations.
fn tangent_directions(
    ens: &Ensemble,
    x0: &CVector,
    y0: &CVector,
    s1: &[usize],
    s2: &[usize],
    random: usize,
    rng: &mut LabRng,
) -> Vec<CMatrix> {
    let (m1, m2) = (ens.m1(), ens.m2());
    let mut gens: Vec<CMatrix> = Vec::new();
    for &l in s2 {
        let mut e = CVector::zeros(m2);
        e[l] = Complex64::new(1.0, 0.0);
        gens.push(x0 * e.transpose());
    }
    for &k in s1 {
        let mut e = CVector::zeros(m1);
        e[k] = Complex64::new(1.0, 0.0);
        gens.push(e * y0.transpose());
    }
    let t = DMatrix::from_fn(m1 * m2, gens.len(), |r, c| gens[c][(r % m1, r / m1)]);
    let svd = t.svd(true, false);
    let smax = svd.singular_values.max();
    let u = svd.u.unwrap();
    let basis: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > 1e-10 * smax).collect();
    let q = u.select_columns(&basis);
    let b = operator_matrix(ens) * &q;
    let svd_b = b.svd(false, true);
    let vt = svd_b.v_t.unwrap();
    let mut order: Vec<usize> = (0..svd_b.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd_b.singular_values[i].total_cmp(&svd_b.singular_values[j]));
    let unvec = |v: CVector| CMatrix::from_column_slice(m1, m2, v.as_slice());
    let mut out: Vec<CMatrix> = order.into_iter().map(|i| unvec(&q * vt.row(i).adjoint())).collect();
    for _ in 0..random {
        let w = CVector::from_fn(q.ncols(), |_, _| complex_gaussian(rng, 1.0));
        let w = &w / Complex64::new(w.norm(), 0.0);
        out.push(unvec(&q * w));
    }
    out
}

/// Walks `t ↦ path(t)` outward from `t = 0` while `‖G(path(t) − M0)‖ ≤ δ`,
/// doubling then bisecting, and returns the farthest feasible point seen.
fn farthest_on_path(
    ens: &Ensemble,
    m0: &CMatrix,
    path: &dyn Fn(f64) -> CMatrix,
    delta: f64,
    limit: f64,
) -> Option<CMatrix> {
    const T_MAX: f64 = 8.0;
    let probe = path(1e-3);
    let slope = g_distance(ens, &probe, m0) / 1e-3;
    let mut t = if slope > 0.0 { (delta / slope).min(1.0) } else { 1.0 };
    let mut best: Option<(f64, CMatrix)> = None;
    let mut record = |m: CMatrix| {
        let dist = (&m - m0).norm();
        if best.as_ref().is_none_or(|(b, _)| dist > *b) {
            best = Some((dist, m));
        }
    };
    let (mut lo, mut hi) = (0.0, None);
    while t <= T_MAX {
        let m = path(t);
        if g_distance(ens, &m, m0) <= limit {
            record(m);
            lo = t;
            t *= 2.0;
        } else {
            hi = Some(t);
            break;
        }
    }
    if let Some(mut hi) = hi {
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            let m = path(mid);
            if g_distance(ens, &m, m0) <= limit {
                record(m);
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    best.map(|(_, m)| m)
}

//! Desk-scale solvers for the lifted problem `min ‖A(M) − z̃‖₂` over rank-1
//! constrained `M`, and certifiers for weak and strong identifiability.
//!
//! Real ensembles are solved over the real field: factors stay real and every
//! least-squares step stacks real and imaginary parts.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensembles::{CMatrix, CVector, ConstraintScenario, Ensemble, ScenarioKind};
use crate::error::{Error, Result};
use crate::lifting::{apply_a_adjoint_raw, apply_a_raw, restricted_operator, LiftedMatrix};
use crate::rng::{mix_seed, rng_from_seed};

/// Default bound on the number of support pairs a sparse solve may enumerate.
pub const DEFAULT_ENUMERATION_CAP: u128 = 100_000;
/// Alternating minimization stops once the relative residual change falls below this.
pub const AM_REL_TOL: f64 = 1e-10;
pub const AM_MAX_ITERS: usize = 500;
/// Smallest singular value a restricted operator needs to count as injective.
pub const INJECTIVITY_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryResult {
    pub m_hat: LiftedMatrix,
    /// `‖A(M̂) − z̃‖₂`.
    pub residual: f64,
    /// `‖M̂ − M0‖_F`, once the truth is attached with [`RecoveryResult::with_truth`].
    pub lifted_error: Option<f64>,
    pub support: Option<(Vec<usize>, Vec<usize>)>,
    pub restarts_used: usize,
    pub supports_visited: usize,
}

impl RecoveryResult {
    pub fn with_truth(mut self, m0: &LiftedMatrix) -> Result<Self> {
        self.lifted_error = Some(align_and_distance(&self.m_hat, m0)?);
        Ok(self)
    }

    /// Recovery success threshold: `‖M̂ − M0‖_F ≤ 1e−6·max(1, ‖M0‖_F)`.
    pub fn is_success(&self, m0: &LiftedMatrix) -> Result<bool> {
        Ok(align_and_distance(&self.m_hat, m0)? <= success_threshold(m0))
    }
}

pub fn success_threshold(m0: &LiftedMatrix) -> f64 {
    1e-6 * m0.frobenius_norm().max(1.0)
}

/// `‖M1 − M2‖_F`. The lifted matrix is invariant under `(x, y) → (σx, y/σ)`,
/// so no explicit alignment of factors is needed.
pub fn align_and_distance(m1: &LiftedMatrix, m2: &LiftedMatrix) -> Result<f64> {
    if m1.shape() != m2.shape() {
        return Err(Error::ShapeMismatch { expected: m2.shape(), found: m1.shape() });
    }
    Ok((m1.matrix() - m2.matrix()).norm())
}

/// Distance from `w` to the line spanned by `reference`: `min_c ‖w − c·reference‖_F`.
pub fn line_distance(w: &LiftedMatrix, reference: &LiftedMatrix) -> Result<f64> {
    if w.shape() != reference.shape() {
        return Err(Error::ShapeMismatch { expected: reference.shape(), found: w.shape() });
    }
    let r = reference.matrix();
    let rr = r.norm_squared();
    if rr == 0.0 {
        return Ok(w.frobenius_norm());
    }
    let c = r.dotc(w.matrix()) / rr;
    Ok((w.matrix() - r * c).norm())
}

/// Least squares on a support: restricted columns of `FD` and `FE`.
struct SupportProblem<'a> {
    z: &'a CVector,
    fd: CMatrix,
    fe: CMatrix,
    real: bool,
}

impl<'a> SupportProblem<'a> {
    fn new(ens: &Ensemble, z: &'a CVector, s1: &[usize], s2: &[usize]) -> Self {
        Self { z, fd: ens.freq_d.select_columns(s1), fe: ens.freq_e.select_columns(s2), real: ens.is_real() }
    }

    fn residual(&self, x: &CVector, y: &CVector) -> f64 {
        let p = (&self.fd * x).component_mul(&(&self.fe * y));
        (p - self.z).norm()
    }

    /// `x ← argmin ‖diag(FE·y)·FD·x − z‖`.
    fn update_x(&self, y: &CVector) -> CVector {
        let w = &self.fe * y;
        lstsq(&scale_rows(&self.fd, &w), self.z, self.real)
    }

    fn update_y(&self, x: &CVector) -> CVector {
        let w = &self.fd * x;
        lstsq(&scale_rows(&self.fe, &w), self.z, self.real)
    }

    /// Alternating minimization from an initial `y`; returns `(x, y, residual)`.
    fn alternate(&self, y0: CVector) -> (CVector, CVector, f64) {
        let mut y = y0;
        let mut x = self.update_x(&y);
        let mut prev = self.residual(&x, &y);
        let floor = 1e-15 * self.z.norm();
        for _ in 0..AM_MAX_ITERS {
            if prev <= floor {
                break;
            }
            y = self.update_y(&x);
            x = self.update_x(&y);
            let (nx, ny) = (x.norm(), y.norm());
            if nx > 0.0 && ny > 0.0 {
                let s = (ny / nx).sqrt();
                x *= Complex64::new(s, 0.0);
                y /= Complex64::new(s, 0.0);
            }
            let r = self.residual(&x, &y);
            let change = (prev - r).abs() / prev.max(f64::MIN_POSITIVE);
            prev = r;
            if change < AM_REL_TOL {
                break;
            }
        }
        (x, y, prev)
    }

    fn random_start<R: Rng + ?Sized>(&self, rng: &mut R) -> CVector {
        random_vector(self.fe.ncols(), self.real, rng)
    }
}

fn scale_rows(m: &CMatrix, w: &CVector) -> CMatrix {
    let mut out = m.clone();
    for (j, wj) in w.iter().enumerate() {
        for c in out.row_mut(j).iter_mut() {
            *c *= wj;
        }
    }
    out
}

fn random_vector<R: Rng + ?Sized>(len: usize, real: bool, rng: &mut R) -> CVector {
    CVector::from_fn(len, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = if real { 0.0 } else { StandardNormal.sample(rng) };
        Complex64::new(re, im)
    })
}

fn pinv_eps(max_sv: f64, rows: usize, cols: usize) -> f64 {
    max_sv * rows.max(cols) as f64 * f64::EPSILON
}

/// Minimum-norm least-squares solution of `a·v = b`, over the reals when `real`.
fn lstsq(a: &CMatrix, b: &CVector, real: bool) -> CVector {
    let (rows, cols) = a.shape();
    if real {
        let stacked = DMatrix::from_fn(2 * rows, cols, |i, k| if i < rows { a[(i, k)].re } else { a[(i - rows, k)].im });
        let rhs = DVector::from_fn(2 * rows, |i, _| if i < rows { b[i].re } else { b[i - rows].im });
        let svd = stacked.svd(true, true);
        let eps = pinv_eps(svd.singular_values.max(), 2 * rows, cols);
        let v = svd.solve(&rhs, eps).unwrap_or_else(|_| DVector::zeros(cols));
        v.map(|r| Complex64::new(r, 0.0))
    } else {
        let svd = a.clone().svd(true, true);
        let eps = pinv_eps(svd.singular_values.max(), rows, cols);
        svd.solve(b, eps).unwrap_or_else(|_| CVector::zeros(cols))
    }
}

/// Top singular pair as rank-1 factors `x = √σ·u`, `y = √σ·conj(v)`, so `x·yᵀ = σ·u·v^*`.
fn top_pair(m: &CMatrix, real: bool) -> (CVector, CVector) {
    if real {
        let svd = m.map(|c| c.re).svd(true, true);
        let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
        let k = svd.singular_values.imax();
        let s = svd.singular_values[k].sqrt();
        let x = u.column(k).map(|r| Complex64::new(r * s, 0.0));
        let y = vt.row(k).transpose().map(|r| Complex64::new(r * s, 0.0));
        (x, y)
    } else {
        let svd = m.clone().svd(true, true);
        let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
        let k = svd.singular_values.imax();
        let s = Complex64::new(svd.singular_values[k].sqrt(), 0.0);
        // v_t holds v^*, so its k-th row is already conj(v_k)ᵀ
        let x = u.column(k) * s;
        let y = vt.row(k).transpose() * s;
        (x, y)
    }
}

fn embed(x: &CVector, y: &CVector, s1: &[usize], s2: &[usize], m1: usize, m2: usize) -> Result<LiftedMatrix> {
    let mut fx = CVector::zeros(m1);
    let mut fy = CVector::zeros(m2);
    for (i, &k) in s1.iter().enumerate() {
        fx[k] = x[i];
    }
    for (i, &k) in s2.iter().enumerate() {
        fy[k] = y[i];
    }
    LiftedMatrix::from_factors(fx, fy)
}

fn check_support(s: &[usize], m: usize, name: &str) -> Result<()> {
    if s.is_empty() {
        return Err(Error::InvalidParameter(format!("support {name} is empty")));
    }
    if s.windows(2).any(|w| w[0] >= w[1]) || s.iter().any(|&k| k >= m) {
        return Err(Error::InvalidParameter(format!("support {name} must be strictly increasing indices below {m}")));
    }
    Ok(())
}

fn check_z(ens: &Ensemble, z: &[Complex64]) -> Result<CVector> {
    if z.len() != ens.n() {
        return Err(Error::LengthMismatch { expected: ens.n(), found: z.len() });
    }
    if let Some(i) = z.iter().position(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    Ok(CVector::from_column_slice(z))
}

fn finish(ens: &Ensemble, z: &CVector, m_hat: LiftedMatrix) -> (LiftedMatrix, f64) {
    let r = (apply_a_raw(ens, m_hat.matrix()) - z).norm();
    (m_hat, r)
}

/// Minimize `‖A(M) − z̃‖₂` over rank-1 `M` supported on `S1 × S2`.
///
/// With `n ≥ |S1|·|S2|` the unconstrained least-squares solution is projected to
/// its top singular pair and polished by alternating minimization. Otherwise
/// alternating minimization starts from the top singular pair of the restricted
/// `A*(z̃)` and from `restarts` random initializations; the best residual wins,
/// earlier starts winning ties.
pub fn solve_fixed_support<R: Rng + ?Sized>(
    ens: &Ensemble,
    z_tilde: &[Complex64],
    s1: &[usize],
    s2: &[usize],
    restarts: usize,
    rng: &mut R,
) -> Result<RecoveryResult> {
    check_support(s1, ens.m1(), "S1")?;
    check_support(s2, ens.m2(), "S2")?;
    let z = check_z(ens, z_tilde)?;
    let support = Some((s1.to_vec(), s2.to_vec()));
    let (m1, m2) = (ens.m1(), ens.m2());
    if z.norm() == 0.0 {
        let zero = CVector::zeros(s1.len());
        let m_hat = embed(&zero, &CVector::zeros(s2.len()), s1, s2, m1, m2)?;
        return Ok(RecoveryResult { m_hat, residual: 0.0, lifted_error: None, support, restarts_used: 0, supports_visited: 1 });
    }
    let prob = SupportProblem::new(ens, &z, s1, s2);
    let (k1, k2) = (s1.len(), s2.len());
    let (best, restarts_used) = if ens.n() >= k1 * k2 {
        let op = restricted_operator(ens, s1, s2);
        let v = lstsq(&op, &z, prob.real);
        let (_, y) = top_pair(&CMatrix::from_column_slice(k1, k2, v.as_slice()), prob.real);
        (prob.alternate(y), 0)
    } else {
        let full = apply_a_adjoint_raw(ens, z.as_slice());
        let restricted = full.select_rows(s1).select_columns(s2);
        let (_, y) = top_pair(&restricted, prob.real);
        let mut best = prob.alternate(y);
        for _ in 0..restarts {
            let cand = prob.alternate(prob.random_start(rng));
            if cand.2 < best.2 {
                best = cand;
            }
        }
        (best, restarts)
    };
    let (m_hat, residual) = finish(ens, &z, embed(&best.0, &best.1, s1, s2, m1, m2)?);
    Ok(RecoveryResult { m_hat, residual, lifted_error: None, support, restarts_used, supports_visited: 1 })
}

/// Enumerate every admissible support pair (lexicographic), solve each, keep the
/// smallest residual; equal residuals keep the lexicographically first pair.
pub fn solve_sparse_enumerate<R: Rng + ?Sized>(
    ens: &Ensemble,
    z_tilde: &[Complex64],
    sc: &ConstraintScenario,
    restarts: usize,
    rng: &mut R,
) -> Result<RecoveryResult> {
    solve_sparse_enumerate_capped(ens, z_tilde, sc, restarts, DEFAULT_ENUMERATION_CAP, rng)
}

pub fn solve_sparse_enumerate_capped<R: Rng + ?Sized>(
    ens: &Ensemble,
    z_tilde: &[Complex64],
    sc: &ConstraintScenario,
    restarts: usize,
    cap: u128,
    rng: &mut R,
) -> Result<RecoveryResult> {
    if sc.kind == ScenarioKind::Subspace {
        return Err(Error::InvalidScenario("support enumeration needs a mixed or sparsity scenario".into()));
    }
    check_scenario_matches(ens, sc)?;
    let pairs = enumerable_pairs(sc, cap)?;
    let base = rng.next_u64();
    let results: Vec<Result<RecoveryResult>> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, (s1, s2))| {
            let mut local = rng_from_seed(mix_seed(base, i as u64));
            solve_fixed_support(ens, z_tilde, s1, s2, restarts, &mut local)
        })
        .collect();
    let mut best: Option<RecoveryResult> = None;
    let mut restarts_used = 0;
    for r in results {
        let r = r?;
        restarts_used += r.restarts_used;
        if best.as_ref().is_none_or(|b| r.residual < b.residual) {
            best = Some(r);
        }
    }
    let mut best = best.ok_or_else(|| Error::InvalidScenario("no admissible supports".into()))?;
    best.restarts_used = restarts_used;
    best.supports_visited = pairs.len();
    Ok(best)
}

/// Solve with the scenario-appropriate strategy: the full support for subspace
/// constraints, enumeration otherwise.
pub fn solve_scenario<R: Rng + ?Sized>(
    ens: &Ensemble,
    z_tilde: &[Complex64],
    sc: &ConstraintScenario,
    restarts: usize,
    rng: &mut R,
) -> Result<RecoveryResult> {
    match sc.kind {
        ScenarioKind::Subspace => {
            check_scenario_matches(ens, sc)?;
            let s1: Vec<usize> = (0..sc.m1).collect();
            let s2: Vec<usize> = (0..sc.m2).collect();
            solve_fixed_support(ens, z_tilde, &s1, &s2, restarts, rng)
        }
        _ => solve_sparse_enumerate(ens, z_tilde, sc, restarts, rng),
    }
}

fn check_scenario_matches(ens: &Ensemble, sc: &ConstraintScenario) -> Result<()> {
    sc.validate_structure()?;
    if (sc.n, sc.m1, sc.m2) != (ens.n(), ens.m1(), ens.m2()) {
        return Err(Error::InvalidScenario(format!(
            "scenario dimensions (n, m1, m2) = ({}, {}, {}) do not match the ensemble ({}, {}, {})",
            sc.n,
            sc.m1,
            sc.m2,
            ens.n(),
            ens.m1(),
            ens.m2()
        )));
    }
    Ok(())
}

fn enumerable_pairs(sc: &ConstraintScenario, cap: u128) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    let count = sc.support_pair_count();
    if count > cap {
        return Err(Error::EnumerationCap { count, cap });
    }
    Ok(sc.support_pairs())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictStatus {
    CertifiedUnique,
    CounterexampleFound,
    HeuristicallyUnique,
}

impl VerdictStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::CertifiedUnique => "CertifiedUnique",
            Self::CounterexampleFound => "CounterexampleFound",
            Self::HeuristicallyUnique => "HeuristicallyUnique",
        }
    }
}

/// Outcome of a certifier. A counterexample is the pair `(witness, reference)`:
/// `reference` is `M0` for weak identifiability and the second rank-1 matrix for
/// strong identifiability.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentifiabilityVerdict {
    pub status: VerdictStatus,
    pub witness: Option<LiftedMatrix>,
    pub reference: Option<LiftedMatrix>,
    pub search_budget: usize,
    pub tolerance: f64,
}

impl IdentifiabilityVerdict {
    fn certified(budget: usize, tol: f64) -> Self {
        Self { status: VerdictStatus::CertifiedUnique, witness: None, reference: None, search_budget: budget, tolerance: tol }
    }

    /// Checks the counterexample invariant `‖A(W) − A(ref)‖₂ ≤ tol` and
    /// `min_c ‖W − c·ref‖_F > 10·tol`. Other statuses verify trivially.
    pub fn verify(&self, ens: &Ensemble) -> Result<bool> {
        if self.status != VerdictStatus::CounterexampleFound {
            return Ok(true);
        }
        let (Some(w), Some(r)) = (&self.witness, &self.reference) else {
            return Ok(false);
        };
        let (mis, far) = witness_gap(ens, w, r)?;
        Ok(mis <= self.tolerance && far > 10.0 * self.tolerance)
    }
}

/// `(‖A(W) − A(ref)‖₂, min_c ‖W − c·ref‖_F)`.
pub fn witness_gap(ens: &Ensemble, w: &LiftedMatrix, reference: &LiftedMatrix) -> Result<(f64, f64)> {
    let mis = (apply_a_raw(ens, w.matrix()) - apply_a_raw(ens, reference.matrix())).norm();
    Ok((mis, line_distance(w, reference)?))
}

fn supp(v: &CVector) -> Vec<usize> {
    v.iter().enumerate().filter(|(_, c)| c.norm() > 0.0).map(|(i, _)| i).collect()
}

fn union(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut u: Vec<usize> = a.iter().chain(b).copied().collect();
    u.sort_unstable();
    u.dedup();
    u
}

fn injective_on(ens: &Ensemble, s1: &[usize], s2: &[usize]) -> bool {
    if ens.n() < s1.len() * s2.len() {
        return false;
    }
    let sv = restricted_operator(ens, s1, s2).singular_values();
    sv.min() > INJECTIVITY_TOL
}

/// Rank-1 factors of `M0`, read from the stored factors or its top singular pair.
fn rank_one_factors(m0: &LiftedMatrix, real: bool) -> Result<(CVector, CVector)> {
    let (x, y) = match m0.factors() {
        Some((x, y)) => (x.clone(), y.clone()),
        None => {
            if m0.frobenius_norm() == 0.0 {
                return Err(Error::ZeroFactors);
            }
            let sv = m0.matrix().singular_values();
            if sv.len() > 1 && sv[1] > 1e-10 * sv.max() {
                return Err(Error::InvalidParameter("M0 is not rank-1".into()));
            }
            top_pair(m0.matrix(), real)
        }
    };
    if x.norm() == 0.0 || y.norm() == 0.0 {
        return Err(Error::ZeroFactors);
    }
    Ok((x, y))
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")))
    }
}

/// Weak identifiability of `M0`: is `M0` the only constrained rank-1 matrix
/// (up to the factor scaling) with measurements `A(M0)`?
///
/// Exact path: every feasible `M` differs from `M0` by a matrix supported on
/// `(S1 ∪ supp x0) × (S2 ∪ supp y0)` for some admissible `(S1, S2)`; if the
/// restricted operator is injective on all of them, `M0` is certified unique.
/// Heuristic path: `budget` alternating minimizations of `‖A(M) − A(M0)‖₂` from
/// random starts, cycling through the supports; a run with residual `≤ tol` and
/// distance `> 10·tol` from the line through `M0` is a counterexample.
pub fn certify_weak<R: Rng + ?Sized>(
    ens: &Ensemble,
    m0: &LiftedMatrix,
    sc: &ConstraintScenario,
    budget: usize,
    tol: f64,
    rng: &mut R,
) -> Result<IdentifiabilityVerdict> {
    check_tol(tol)?;
    check_scenario_matches(ens, sc)?;
    if m0.shape() != (ens.m1(), ens.m2()) {
        return Err(Error::ShapeMismatch { expected: (ens.m1(), ens.m2()), found: m0.shape() });
    }
    let (x0, y0) = rank_one_factors(m0, ens.is_real())?;
    let pairs = enumerable_pairs(sc, DEFAULT_ENUMERATION_CAP)?;
    let (sx, sy) = (supp(&x0), supp(&y0));
    if pairs.iter().all(|(s1, s2)| injective_on(ens, &union(s1, &sx), &union(s2, &sy))) {
        return Ok(IdentifiabilityVerdict::certified(budget, tol));
    }
    let z = apply_a_raw(ens, m0.matrix());
    let base = rng.next_u64();
    let found = search(budget, |r| {
        let (s1, s2) = &pairs[r % pairs.len()];
        let prob = SupportProblem::new(ens, &z, s1, s2);
        let mut local = rng_from_seed(mix_seed(base, r as u64));
        let (x, y, _) = prob.alternate(prob.random_start(&mut local));
        let w = embed(&x, &y, s1, s2, ens.m1(), ens.m2())?;
        let (mis, far) = witness_gap(ens, &w, m0)?;
        Ok((mis <= tol && far > 10.0 * tol).then_some((w, m0.clone())))
    })?;
    Ok(verdict_from_search(found, budget, tol))
}

/// Strong identifiability: no two constrained rank-1 matrices off a common line
/// share their measurements.
///
/// Exact path: the difference of two feasible matrices lives on
/// `(S1 ∪ S1') × (S2 ∪ S2')`; injectivity on every such union certifies.
/// Heuristic path: each of `budget` runs draws a random constrained `M2`, fits
/// `M1` to `A(M2)` from a random start, and rescales the pair jointly so the
/// larger has unit Frobenius norm.
pub fn certify_strong<R: Rng + ?Sized>(
    ens: &Ensemble,
    sc: &ConstraintScenario,
    budget: usize,
    tol: f64,
    rng: &mut R,
) -> Result<IdentifiabilityVerdict> {
    check_tol(tol)?;
    check_scenario_matches(ens, sc)?;
    let pairs = enumerable_pairs(sc, DEFAULT_ENUMERATION_CAP)?;
    let mut unions: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for (a1, a2) in &pairs {
        for (b1, b2) in &pairs {
            unions.push((union(a1, b1), union(a2, b2)));
        }
    }
    unions.sort();
    unions.dedup();
    if unions.iter().all(|(u1, u2)| injective_on(ens, u1, u2)) {
        return Ok(IdentifiabilityVerdict::certified(budget, tol));
    }
    let real = ens.is_real();
    let base = rng.next_u64();
    let found = search(budget, |r| {
        let mut local = rng_from_seed(mix_seed(base, r as u64));
        let (t1, t2) = &pairs[local.random_range(0..pairs.len())];
        let m2 = embed(&random_vector(t1.len(), real, &mut local), &random_vector(t2.len(), real, &mut local), t1, t2, ens.m1(), ens.m2())?;
        let m2 = m2.scaled(1.0 / m2.frobenius_norm());
        let z = apply_a_raw(ens, m2.matrix());
        let (s1, s2) = &pairs[r % pairs.len()];
        let prob = SupportProblem::new(ens, &z, s1, s2);
        let (x, y, _) = prob.alternate(prob.random_start(&mut local));
        let m1 = embed(&x, &y, s1, s2, ens.m1(), ens.m2())?;
        let scale = m1.frobenius_norm().max(m2.frobenius_norm());
        if scale == 0.0 {
            return Ok(None);
        }
        let (m1, m2) = (m1.scaled(1.0 / scale), m2.scaled(1.0 / scale));
        let (mis, far) = witness_gap(ens, &m1, &m2)?;
        Ok((mis <= tol && far > 10.0 * tol).then_some((m1, m2)))
    })?;
    Ok(verdict_from_search(found, budget, tol))
}

type Witness = (LiftedMatrix, LiftedMatrix);

/// Runs `budget` independent attempts in parallel and returns the lowest-indexed hit.
fn search(budget: usize, attempt: impl Fn(usize) -> Result<Option<Witness>> + Sync + Send) -> Result<Option<Witness>> {
    let hits: Vec<Result<Option<Witness>>> = (0..budget).into_par_iter().map(attempt).collect();
    for h in hits {
        if let Some(w) = h? {
            return Ok(Some(w));
        }
    }
    Ok(None)
}

fn verdict_from_search(found: Option<Witness>, budget: usize, tol: f64) -> IdentifiabilityVerdict {
    match found {
        Some((w, r)) => IdentifiabilityVerdict {
            status: VerdictStatus::CounterexampleFound,
            witness: Some(w),
            reference: Some(r),
            search_budget: budget,
            tolerance: tol,
        },
        None => IdentifiabilityVerdict {
            status: VerdictStatus::HeuristicallyUnique,
            witness: None,
            reference: None,
            search_budget: budget,
            tolerance: tol,
        },
    }
}

//! Constraint scenarios and random bases/frames `D`, `E`.
//!
//! An [`Ensemble`] keeps the time-domain matrices together with their DFTs
//! `FD`, `FE`; the frequency-domain vectors are `a_j = (FD)^{(j,:)*}` and
//! `b_j = (FE)^{(j,:)*}`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Subspace,
    Mixed,
    Sparsity,
}

impl std::str::FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "subspace" => Ok(Self::Subspace),
            "mixed" => Ok(Self::Mixed),
            "sparsity" => Ok(Self::Sparsity),
            other => Err(Error::InvalidScenario(format!(
                "unknown kind `{other}` (expected subspace, mixed or sparsity)"
            ))),
        }
    }
}

/// Which of the three constraint scenarios is in force, with its dimensions.
///
/// `Ω_X` is `C^{m1}` (subspace) or the `s1`-sparse vectors of `C^{m1}`;
/// `Ω_Y` likewise with `m2`, `s2`. Mixed is sparse in `x` and subspace in `y`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintScenario {
    pub kind: ScenarioKind,
    pub n: usize,
    pub m1: usize,
    pub m2: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s1: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s2: Option<usize>,
}

impl ConstraintScenario {
    /// Fully validated scenario (including `m1, m2 < n` where the kind requires it).
    pub fn new(
        kind: ScenarioKind,
        n: usize,
        m1: usize,
        m2: usize,
        s1: Option<usize>,
        s2: Option<usize>,
    ) -> Result<Self> {
        let sc = Self { kind, n, m1, m2, s1, s2 };
        sc.validate()?;
        Ok(sc)
    }

    pub fn subspace(n: usize, m1: usize, m2: usize) -> Result<Self> {
        Self::new(ScenarioKind::Subspace, n, m1, m2, None, None)
    }

    pub fn mixed(n: usize, m1: usize, s1: usize, m2: usize) -> Result<Self> {
        Self::new(ScenarioKind::Mixed, n, m1, m2, Some(s1), None)
    }

    pub fn sparsity(n: usize, m1: usize, s1: usize, m2: usize, s2: usize) -> Result<Self> {
        Self::new(ScenarioKind::Sparsity, n, m1, m2, Some(s1), Some(s2))
    }

    /// Scenario for probing the under-determined regime: only the structural
    /// checks of [`Self::validate_structure`] apply, so `n ≤ m1` is allowed.
    pub fn probe(
        kind: ScenarioKind,
        n: usize,
        m1: usize,
        m2: usize,
        s1: Option<usize>,
        s2: Option<usize>,
    ) -> Result<Self> {
        let sc = Self { kind, n, m1, m2, s1, s2 };
        sc.validate_structure()?;
        Ok(sc)
    }

    /// Same constraint sets with a different number of measurements (structure checked only).
    pub fn with_n(&self, n: usize) -> Result<Self> {
        let sc = Self { n, ..self.clone() };
        sc.validate_structure()?;
        Ok(sc)
    }

    /// Positivity, sparsity levels present where required and `s ≤ m`.
    pub fn validate_structure(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScenario(msg));
        if self.n == 0 || self.m1 == 0 || self.m2 == 0 {
            return bad("n, m1 and m2 must be positive".into());
        }
        let check_level = |s: Option<usize>, m: usize, name: &str| -> Result<()> {
            match s {
                None => Err(Error::InvalidScenario(format!("{name} is required for this kind"))),
                Some(0) => Err(Error::InvalidScenario(format!("{name} must be positive"))),
                Some(s) if s > m => Err(Error::InvalidScenario(format!(
                    "{name} = {s} exceeds its dimension {m}"
                ))),
                Some(_) => Ok(()),
            }
        };
        match self.kind {
            ScenarioKind::Subspace => {
                if self.s1.is_some() || self.s2.is_some() {
                    return bad("subspace scenario takes no sparsity levels".into());
                }
            }
            ScenarioKind::Mixed => {
                check_level(self.s1, self.m1, "s1")?;
                if self.s2.is_some() {
                    return bad("mixed scenario takes no s2".into());
                }
            }
            ScenarioKind::Sparsity => {
                check_level(self.s1, self.m1, "s1")?;
                check_level(self.s2, self.m2, "s2")?;
            }
        }
        Ok(())
    }

    /// Structural checks plus the subspace-dimension conditions `m < n`.
    pub fn validate(&self) -> Result<()> {
        self.validate_structure()?;
        let subspace_x = self.kind == ScenarioKind::Subspace;
        let subspace_y = self.kind != ScenarioKind::Sparsity;
        if subspace_x && self.m1 >= self.n {
            return Err(Error::InvalidScenario(format!(
                "subspace constraint needs m1 < n (m1 = {}, n = {})",
                self.m1, self.n
            )));
        }
        if subspace_y && self.m2 >= self.n {
            return Err(Error::InvalidScenario(format!(
                "subspace constraint needs m2 < n (m2 = {}, n = {})",
                self.m2, self.n
            )));
        }
        Ok(())
    }

    /// Number of free coordinates of `x` (s1, or m1 for a subspace constraint).
    pub fn level_x(&self) -> usize {
        match self.kind {
            ScenarioKind::Subspace => self.m1,
            _ => self.s1.unwrap_or(self.m1),
        }
    }

    pub fn level_y(&self) -> usize {
        match self.kind {
            ScenarioKind::Sparsity => self.s2.unwrap_or(self.m2),
            _ => self.m2,
        }
    }

    /// Admissible supports of `x`, in lexicographic order.
    pub fn supports_x(&self) -> Vec<Vec<usize>> {
        combinations(self.m1, self.level_x())
    }

    pub fn supports_y(&self) -> Vec<Vec<usize>> {
        combinations(self.m2, self.level_y())
    }

    /// Number of admissible support pairs, without materializing them.
    pub fn support_pair_count(&self) -> u128 {
        binomial_u128(self.m1, self.level_x()) * binomial_u128(self.m2, self.level_y())
    }

    /// All admissible `(S1, S2)` pairs in lexicographic order.
    pub fn support_pairs(&self) -> Vec<(Vec<usize>, Vec<usize>)> {
        let ys = self.supports_y();
        self.supports_x()
            .into_iter()
            .flat_map(|s1| ys.iter().map(move |s2| (s1.clone(), s2.clone())))
            .collect()
    }
}

/// Size-`k` subsets of `0..m` in lexicographic order.
pub fn combinations(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > m {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] < m - k + i) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

pub fn binomial_u128(m: usize, k: usize) -> u128 {
    if k > m {
        return 0;
    }
    let k = k.min(m - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (m - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// How `D`, `E` are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EnsembleTag {
    /// i.i.d. standard complex Gaussian entries.
    ComplexGeneric,
    /// Rows `a_j`, `b_j` i.i.d. uniform on radius-`radius` complex balls.
    ComplexUniformBall { radius: f64 },
    /// i.i.d. standard real Gaussian entries.
    RealGeneric,
    /// Real `D`, `E` whose free DFT rows are uniform on balls (conjugate-symmetric completion).
    RealUniformBall { radius: f64 },
}

impl EnsembleTag {
    pub fn is_real(&self) -> bool {
        matches!(self, Self::RealGeneric | Self::RealUniformBall { .. })
    }

    pub fn radius(&self) -> Option<f64> {
        match *self {
            Self::ComplexUniformBall { radius } | Self::RealUniformBall { radius } => Some(radius),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::ComplexGeneric => "complex_generic",
            Self::ComplexUniformBall { .. } => "complex_uniform_ball",
            Self::RealGeneric => "real_generic",
            Self::RealUniformBall { .. } => "real_uniform_ball",
        }
    }

    /// Parse a tag name; ball tags need a radius.
    pub fn parse(name: &str, radius: Option<f64>) -> Result<Self> {
        let need_radius = || {
            radius.ok_or_else(|| Error::InvalidParameter(format!("tag `{name}` needs a radius")))
        };
        match name {
            "complex_generic" => Ok(Self::ComplexGeneric),
            "real_generic" => Ok(Self::RealGeneric),
            "complex_uniform_ball" => Ok(Self::ComplexUniformBall { radius: need_radius()? }),
            "real_uniform_ball" => Ok(Self::RealUniformBall { radius: need_radius()? }),
            other => Err(Error::InvalidParameter(format!("unknown ensemble tag `{other}`"))),
        }
    }
}

/// A realized pair of bases/frames together with their DFTs.
#[derive(Clone, Debug)]
pub struct Ensemble {
    pub scenario: ConstraintScenario,
    pub tag: EnsembleTag,
    pub seed: Option<u64>,
    /// `n × m1`
    pub d: CMatrix,
    /// `n × m2`
    pub e: CMatrix,
    /// `F·D`; row j is `a_j^*`.
    pub freq_d: CMatrix,
    /// `F·E`; row j is `b_j^*`.
    pub freq_e: CMatrix,
}

impl Ensemble {
    /// Assemble from time-domain matrices, computing the DFT rows.
    pub fn from_matrices(
        scenario: ConstraintScenario,
        tag: EnsembleTag,
        d: CMatrix,
        e: CMatrix,
    ) -> Result<Self> {
        let n = scenario.n;
        if d.shape() != (n, scenario.m1) {
            return Err(Error::ShapeMismatch { expected: (n, scenario.m1), found: d.shape() });
        }
        if e.shape() != (n, scenario.m2) {
            return Err(Error::ShapeMismatch { expected: (n, scenario.m2), found: e.shape() });
        }
        let f = dft_matrix(n);
        let freq_d = &f * &d;
        let freq_e = &f * &e;
        Ok(Self { scenario, tag, seed: None, d, e, freq_d, freq_e })
    }

    /// Build from a seed, dispatching on the tag.
    pub fn generate(scenario: &ConstraintScenario, tag: EnsembleTag, seed: u64) -> Result<Self> {
        let mut rng = rng_from_seed(seed);
        let mut ens = if tag.is_real() {
            build_real_ensemble(scenario, tag, &mut rng)?
        } else {
            build_complex_ensemble(scenario, tag, &mut rng)?
        };
        ens.seed = Some(seed);
        Ok(ens)
    }

    pub fn n(&self) -> usize {
        self.scenario.n
    }

    pub fn m1(&self) -> usize {
        self.scenario.m1
    }

    pub fn m2(&self) -> usize {
        self.scenario.m2
    }

    pub fn is_real(&self) -> bool {
        self.tag.is_real()
    }

    /// `a_j = (FD)^{(j,:)*}` (0-based j).
    pub fn a(&self, j: usize) -> CVector {
        self.freq_d.row(j).adjoint()
    }

    /// `b_j = (FE)^{(j,:)*}` (0-based j).
    pub fn b(&self, j: usize) -> CVector {
        self.freq_e.row(j).adjoint()
    }

    /// Numerical column ranks of `D` and `E` (diagnostic only).
    pub fn column_ranks(&self) -> (usize, usize) {
        let rank = |m: &CMatrix| m.clone().svd(false, false).rank(1e-10 * m.norm().max(1.0));
        (rank(&self.d), rank(&self.e))
    }

    pub fn spec(&self) -> Option<EnsembleSpec> {
        self.seed.map(|seed| EnsembleSpec {
            scenario: self.scenario.clone(),
            seed,
            tag: self.tag,
        })
    }
}

/// Serializable description of an ensemble; the matrices are re-derived from the seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub scenario: ConstraintScenario,
    pub seed: u64,
    pub tag: EnsembleTag,
}

impl EnsembleSpec {
    pub fn realize(&self) -> Result<Ensemble> {
        Ensemble::generate(&self.scenario, self.tag, self.seed)
    }
}

/// Unitary DFT matrix with entries `exp(-2πi·jk/n)/√n`.
pub fn dft_matrix(n: usize) -> CMatrix {
    let scale = 1.0 / (n as f64).sqrt();
    CMatrix::from_fn(n, n, |j, k| {
        Complex64::from_polar(scale, -2.0 * PI * ((j * k) % n) as f64 / n as f64)
    })
}

pub(crate) fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

fn check_radius(radius: f64) -> Result<()> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter(format!("ball radius must be positive, got {radius}")));
    }
    Ok(())
}

/// Uniform sample from the radius-`radius` ball of `R^dim`, as a plain vector.
fn sample_real_ball_coords<R: Rng + ?Sized>(dim: usize, radius: f64, rng: &mut R) -> Vec<f64> {
    let mut g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
    let mut norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    while norm == 0.0 {
        g = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    }
    let u: f64 = rng.random();
    let r = radius * u.powf(1.0 / dim as f64);
    for v in g.iter_mut() {
        *v *= r / norm;
    }
    let len = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    if len > radius {
        for v in g.iter_mut() {
            *v *= radius / len;
        }
    }
    g
}

/// Uniform sample from the radius-`radius` ball of `C^m` (real dimension 2m):
/// isotropic Gaussian direction times `radius·U^{1/(2m)}`.
pub fn sample_uniform_complex_ball<R: Rng + ?Sized>(m: usize, radius: f64, rng: &mut R) -> Result<CVector> {
    check_radius(radius)?;
    if m == 0 {
        return Err(Error::InvalidParameter("ball dimension must be positive".into()));
    }
    let g = sample_real_ball_coords(2 * m, radius, rng);
    Ok(CVector::from_fn(m, |k, _| Complex64::new(g[k], g[m + k])))
}

/// Uniform sample from the radius-`radius` ball of `R^m`.
pub fn sample_uniform_real_ball<R: Rng + ?Sized>(m: usize, radius: f64, rng: &mut R) -> Result<DVector<f64>> {
    check_radius(radius)?;
    if m == 0 {
        return Err(Error::InvalidParameter("ball dimension must be positive".into()));
    }
    Ok(DVector::from_vec(sample_real_ball_coords(m, radius, rng)))
}

/// Complex ensembles: Gaussian `D`, `E`, or uniform-ball rows `a_j`, `b_j`.
pub fn build_complex_ensemble<R: Rng + ?Sized>(
    sc: &ConstraintScenario,
    tag: EnsembleTag,
    rng: &mut R,
) -> Result<Ensemble> {
    sc.validate_structure()?;
    let (n, m1, m2) = (sc.n, sc.m1, sc.m2);
    match tag {
        EnsembleTag::ComplexGeneric => {
            let d = CMatrix::from_fn(n, m1, |_, _| complex_gaussian(rng, 1.0));
            let e = CMatrix::from_fn(n, m2, |_, _| complex_gaussian(rng, 1.0));
            Ensemble::from_matrices(sc.clone(), tag, d, e)
        }
        EnsembleTag::ComplexUniformBall { radius } => {
            check_radius(radius)?;
            let mut freq_d = CMatrix::zeros(n, m1);
            let mut freq_e = CMatrix::zeros(n, m2);
            for j in 0..n {
                let a = sample_uniform_complex_ball(m1, radius, rng)?;
                let b = sample_uniform_complex_ball(m2, radius, rng)?;
                freq_d.set_row(j, &a.adjoint());
                freq_e.set_row(j, &b.adjoint());
            }
            let f_inv = dft_matrix(n).adjoint();
            let d = &f_inv * &freq_d;
            let e = &f_inv * &freq_e;
            // Keep the sampled rows verbatim so the radius bound is exact.
            Ok(Ensemble { scenario: sc.clone(), tag, seed: None, d, e, freq_d, freq_e })
        }
        _ => Err(Error::InvalidParameter(format!(
            "tag {} is not a complex ensemble",
            tag.name()
        ))),
    }
}

/// Free DFT rows of a real matrix: row 0 (and row n/2 for even n) real, rows
/// 1..=⌈(n+1)/2⌉−1 complex, the rest fixed by `a_j = conj(a_{n−j})`.
fn real_symmetric_rows<R: Rng + ?Sized>(n: usize, m: usize, radius: f64, rng: &mut R) -> Result<CMatrix> {
    let mut rows: Vec<Option<CVector>> = vec![None; n];
    let free = (n + 2) / 2; // ⌈(n+1)/2⌉
    for (j, slot) in rows.iter_mut().enumerate().take(free) {
        let self_conjugate = j == 0 || (n.is_multiple_of(2) && j == n / 2);
        *slot = Some(if self_conjugate {
            sample_uniform_real_ball(m, radius, rng)?.map(|v| Complex64::new(v, 0.0))
        } else {
            sample_uniform_complex_ball(m, radius, rng)?
        });
    }
    for j in free..n {
        rows[j] = Some(rows[n - j].as_ref().expect("free row").conjugate());
    }
    let mut freq = CMatrix::zeros(n, m);
    for (j, a) in rows.into_iter().enumerate() {
        freq.set_row(j, &a.expect("row filled").adjoint());
    }
    Ok(freq)
}

/// Real ensembles: Gaussian `D`, `E`, or the conjugate-symmetric uniform-ball recipe.
pub fn build_real_ensemble<R: Rng + ?Sized>(
    sc: &ConstraintScenario,
    tag: EnsembleTag,
    rng: &mut R,
) -> Result<Ensemble> {
    sc.validate_structure()?;
    let (n, m1, m2) = (sc.n, sc.m1, sc.m2);
    match tag {
        EnsembleTag::RealGeneric => {
            let mut draw = |_, _| {
                let v: f64 = StandardNormal.sample(rng);
                Complex64::new(v, 0.0)
            };
            let d = CMatrix::from_fn(n, m1, &mut draw);
            let e = CMatrix::from_fn(n, m2, &mut draw);
            Ensemble::from_matrices(sc.clone(), tag, d, e)
        }
        EnsembleTag::RealUniformBall { radius } => {
            check_radius(radius)?;
            let freq_d = real_symmetric_rows(n, m1, radius, rng)?;
            let freq_e = real_symmetric_rows(n, m2, radius, rng)?;
            let f_inv = dft_matrix(n).adjoint();
            let to_real = |m: CMatrix| -> Result<CMatrix> {
                let worst = m.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
                if worst > 1e-10 {
                    return Err(Error::LinearAlgebra("conjugate-symmetric rows did not invert to a real matrix"));
                }
                Ok(m.map(|c| Complex64::new(c.re, 0.0)))
            };
            let d = to_real(&f_inv * &freq_d)?;
            let e = to_real(&f_inv * &freq_e)?;
            // Recompute the rows from the truncated real matrices so that the
            // stored a_j, b_j are exactly the DFT rows of D, E.
            Ensemble::from_matrices(sc.clone(), tag, d, e)
        }
        _ => Err(Error::InvalidParameter(format!("tag {} is not a real ensemble", tag.name()))),
    }
}

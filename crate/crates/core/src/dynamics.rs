//! Right-invariant bilinear systems `ẋ = (A + Σ u_j B_j) x` on `SL(n, R)`
//! and the systems they induce on flag manifolds.
//!
//! Controls are piecewise constant, so trajectories are products of
//! matrix exponentials and are exact up to the exponential itself.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flag::{self, FlagPoint, FlagSignature};
use crate::lie::TOL_TRACE;

/// Compact box `U = Π [lo_j, hi_j]` with `0` in its interior.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlRange {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ControlRange {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let range = Self { lo, hi };
        range.validate()?;
        Ok(range)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lo.is_empty() || self.lo.len() != self.hi.len() {
            return Err(Error::Config(format!(
                "range: lo has {} entries and hi has {}; need the same positive number",
                self.lo.len(),
                self.hi.len()
            )));
        }
        for (j, (&l, &h)) in self.lo.iter().zip(&self.hi).enumerate() {
            if !(l < 0.0 && 0.0 < h) || !l.is_finite() || !h.is_finite() {
                return Err(Error::Config(format!("range: need lo < 0 < hi, got [{l}, {h}] on axis {j}")));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        const SLACK: f64 = 1e-12;
        u.len() == self.dim()
            && u.iter().zip(self.lo.iter().zip(&self.hi)).all(|(&x, (&l, &h))| l - SLACK <= x && x <= h + SLACK)
    }

    pub fn is_interior(&self, u: &[f64]) -> bool {
        u.len() == self.dim() && u.iter().zip(self.lo.iter().zip(&self.hi)).all(|(&x, (&l, &h))| l < x && x < h)
    }
}

/// JSON layout of a system: `{"n", "A", "B", "range": {"lo", "hi"}}`, with
/// matrices as arrays of rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub n: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<Vec<f64>>>,
    pub range: ControlRange,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BilinearSystem {
    n: usize,
    a: DMatrix<f64>,
    b: Vec<DMatrix<f64>>,
    range: ControlRange,
}

fn check_traceless(name: &str, m: &DMatrix<f64>) -> Result<()> {
    let tr = m.trace();
    if tr.abs() > TOL_TRACE * m.norm().max(1.0) {
        return Err(Error::Config(format!("{name}: trace is {tr:.3e}, must be zero")));
    }
    Ok(())
}

fn matrix_from_rows(name: &str, n: usize, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Config(format!("{name}: expected a {n}x{n} matrix")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Config(format!("{name}: non-finite entry")));
    }
    Ok(DMatrix::from_fn(n, n, |r, c| rows[r][c]))
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl BilinearSystem {
    pub fn new(a: DMatrix<f64>, b: Vec<DMatrix<f64>>, range: ControlRange) -> Result<Self> {
        let n = a.nrows();
        if n < 2 {
            return Err(Error::InvalidDimension(n));
        }
        if a.ncols() != n {
            return Err(Error::Config(format!("A: expected a square matrix, got {:?}", a.shape())));
        }
        check_traceless("A", &a)?;
        if b.is_empty() {
            return Err(Error::Config("B: need at least one control matrix".into()));
        }
        for (j, bj) in b.iter().enumerate() {
            if bj.shape() != (n, n) {
                return Err(Error::Config(format!("B[{j}]: expected {n}x{n}, got {:?}", bj.shape())));
            }
            check_traceless(&format!("B[{j}]"), bj)?;
        }
        range.validate()?;
        if range.dim() != b.len() {
            return Err(Error::Config(format!("range has {} axes for {} control matrices", range.dim(), b.len())));
        }
        Ok(Self { n, a, b, range })
    }

    pub fn from_spec(spec: &SystemSpec) -> Result<Self> {
        if spec.n < 2 {
            return Err(Error::InvalidDimension(spec.n));
        }
        let a = matrix_from_rows("A", spec.n, &spec.a)?;
        let b = spec
            .b
            .iter()
            .enumerate()
            .map(|(j, m)| matrix_from_rows(&format!("B[{j}]"), spec.n, m))
            .collect::<Result<Vec<_>>>()?;
        Self::new(a, b, spec.range.clone())
    }

    pub fn to_spec(&self) -> SystemSpec {
        SystemSpec {
            n: self.n,
            a: matrix_to_rows(&self.a),
            b: self.b.iter().map(matrix_to_rows).collect(),
            range: self.range.clone(),
        }
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let spec: SystemSpec =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_spec(&spec)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.b.len()
    }

    pub fn drift(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn controls(&self) -> &[DMatrix<f64>] {
        &self.b
    }

    pub fn range(&self) -> &ControlRange {
        &self.range
    }
}

/// `A + Σ u_j B_j`.
pub fn drift_matrix(sys: &BilinearSystem, u: &[f64]) -> Result<DMatrix<f64>> {
    if !sys.range.contains(u) {
        return Err(Error::Range(format!("{u:?} not in {:?}..{:?}", sys.range.lo, sys.range.hi)));
    }
    let mut x = sys.a.clone();
    for (uj, bj) in u.iter().zip(&sys.b) {
        x += bj * *uj;
    }
    Ok(x)
}

/// Piecewise-constant control: pieces `(u_k, dt_k)` applied in order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ControlWord {
    pieces: Vec<(Vec<f64>, f64)>,
}

impl ControlWord {
    pub fn new(pieces: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        if let Some((_, dt)) = pieces.iter().find(|(_, dt)| !(*dt > 0.0 && dt.is_finite())) {
            return Err(Error::Config(format!("control word: duration {dt} must be positive")));
        }
        Ok(Self { pieces })
    }

    pub fn constant(u: Vec<f64>, dt: f64) -> Result<Self> {
        Self::new(vec![(u, dt)])
    }

    pub fn pieces(&self) -> &[(Vec<f64>, f64)] {
        &self.pieces
    }

    pub fn duration(&self) -> f64 {
        self.pieces.iter().map(|(_, dt)| dt).sum()
    }
}

/// `exp(t·X)` by scaling and squaring with a Padé approximant.
pub fn expm(x: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    (x * t).exp()
}

/// Propagator of one constant piece, split so that every factor has
/// `‖dt·X‖_F ≤ 1`; the flag is renormalized after each factor.
#[derive(Clone, Debug)]
pub struct Propagator {
    step: DMatrix<f64>,
    repeats: usize,
}

impl Propagator {
    pub fn new(x: &DMatrix<f64>, dt: f64) -> Self {
        let repeats = (dt * x.norm()).ceil().max(1.0) as usize;
        Self { step: expm(x, dt / repeats as f64), repeats }
    }

    pub fn apply(&self, p: &FlagPoint) -> Result<FlagPoint> {
        let mut cur = flag::act(&self.step, p)?;
        for _ in 1..self.repeats {
            cur = flag::act(&self.step, &cur)?;
        }
        Ok(cur)
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let mut m = self.step.clone();
        for _ in 1..self.repeats {
            m = &self.step * m;
        }
        m
    }
}

/// Transition map `φ(t, x, u)` of the induced system on `F_Θ`.
pub fn flow_point(sys: &BilinearSystem, x: &FlagPoint, word: &ControlWord) -> Result<FlagPoint> {
    if x.n() != sys.n {
        return Err(Error::Dimension(format!("flag in R^{} for a system on R^{}", x.n(), sys.n)));
    }
    let mut cur = x.clone();
    for (u, dt) in &word.pieces {
        cur = Propagator::new(&drift_matrix(sys, u)?, *dt).apply(&cur)?;
    }
    Ok(cur)
}

/// Accumulated group element `exp(dt_k X_k) ··· exp(dt_1 X_1)`.
pub fn flow_matrix(sys: &BilinearSystem, word: &ControlWord) -> Result<DMatrix<f64>> {
    let mut g = DMatrix::identity(sys.n, sys.n);
    for (u, dt) in &word.pieces {
        g = Propagator::new(&drift_matrix(sys, u)?, *dt).matrix() * g;
    }
    Ok(g)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlSample {
    pub u: Vec<f64>,
    /// Strictly inside `U`.
    pub interior: bool,
}

/// Grid over `U`: per axis, `level` equal steps from `lo` to `0` and from
/// `0` to `hi`; the grid is the product of the axes.
pub fn control_samples(range: &ControlRange, level: usize) -> Result<Vec<ControlSample>> {
    if level == 0 {
        return Err(Error::Config("control level must be at least 1".into()));
    }
    range.validate()?;
    let axes: Vec<Vec<f64>> = range
        .lo
        .iter()
        .zip(&range.hi)
        .map(|(&lo, &hi)| {
            let mut axis: Vec<f64> = (0..level).map(|k| lo * (level - k) as f64 / level as f64).collect();
            axis.push(0.0);
            axis.extend((1..=level).map(|k| hi * k as f64 / level as f64));
            axis
        })
        .collect();
    let mut grid: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in &axes {
        grid = grid
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    Ok(grid
        .into_iter()
        .map(|u| {
            let interior = range.is_interior(&u);
            ControlSample { u, interior }
        })
        .collect())
}

/// Time-reversed system: `A ↦ -A`, `B_j ↦ -B_j`.
pub fn backward_system(sys: &BilinearSystem) -> BilinearSystem {
    BilinearSystem { n: sys.n, a: -&sys.a, b: sys.b.iter().map(|b| -b).collect(), range: sys.range.clone() }
}

fn bracket(x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    x * y - y * x
}

/// Orthonormal basis (in the Frobenius inner product) of the Lie algebra
/// generated by `gens`.
pub fn lie_algebra_basis(gens: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
    const TOL: f64 = 1e-9;
    let mut basis: Vec<DMatrix<f64>> = Vec::new();
    let push = |m: DMatrix<f64>, basis: &mut Vec<DMatrix<f64>>| -> bool {
        let scale = m.norm();
        if scale == 0.0 {
            return false;
        }
        let mut v = m / scale;
        for _ in 0..2 {
            for b in basis.iter() {
                let c = b.dot(&v);
                v -= b * c;
            }
        }
        let norm = v.norm();
        if norm > TOL {
            basis.push(v / norm);
            true
        } else {
            false
        }
    };
    for g in gens {
        push(g.clone(), &mut basis);
    }
    let mut frontier = 0;
    while frontier < basis.len() {
        let end = basis.len();
        for i in frontier..end {
            for j in 0..i {
                let c = bracket(&basis[i], &basis[j]);
                push(c, &mut basis);
            }
        }
        frontier = end;
    }
    basis
}

/// Derivative of the flag's projectors along the flow of `y`, stacked.
fn tangent_vector(y: &DMatrix<f64>, x: &FlagPoint) -> Vec<f64> {
    let n = x.n();
    let id = DMatrix::<f64>::identity(n, n);
    x.projectors()
        .into_iter()
        .flat_map(|p| {
            let q = &id - &p;
            let dp = &q * y * &p + &p * y.transpose() * &q;
            dp.iter().copied().collect::<Vec<_>>()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccessibilityReport {
    pub algebra_dimension: usize,
    pub manifold_dimension: usize,
    pub points_tested: usize,
    pub min_rank: usize,
    pub passed: bool,
}

/// Lie algebra rank condition on `F_Θ`, tested at `points` seeded random
/// flags. A diagnostic: passing at samples does not certify accessibility
/// everywhere.
pub fn accessibility_rank(
    sys: &BilinearSystem,
    signature: &FlagSignature,
    points: usize,
    seed: u64,
) -> AccessibilityReport {
    let mut gens = vec![sys.a.clone()];
    gens.extend(sys.b.iter().cloned());
    let basis = lie_algebra_basis(&gens);
    let manifold_dimension = signature.manifold_dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_rank = usize::MAX;
    for _ in 0..points {
        let x = flag::random_point(signature, &mut rng);
        let rows: Vec<Vec<f64>> = basis.iter().map(|y| tangent_vector(y, &x)).collect();
        let rank = if rows.is_empty() || rows[0].is_empty() {
            0
        } else {
            DMatrix::from_fn(rows.len(), rows[0].len(), |r, c| rows[r][c]).rank(1e-8)
        };
        min_rank = min_rank.min(rank);
    }
    if points == 0 {
        min_rank = 0;
    }
    AccessibilityReport {
        algebra_dimension: basis.len(),
        manifold_dimension,
        points_tested: points,
        min_rank,
        passed: points > 0 && min_rank >= manifold_dimension,
    }
}

//! Flag manifolds `F_Θ` of `SL(n, R)` as nested subspaces carried by
//! orthonormal frames.
//!
//! A flag of signature `d_1 < ... < d_k` is stored as an `n × n` orthonormal
//! frame whose first `d_i` columns span the `d_i`-dimensional member. The
//! parabolic type `Θ` selects the dimensions by complement: the flag keeps
//! `V_d` exactly when `d ∉ Θ`.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weyl::ThetaSet;

/// Orthonormality tolerance for frames.
pub const TOL_FRAME: f64 = 1e-9;

/// Relative size below which a Gram–Schmidt pivot counts as zero.
const SINGULAR_PIVOT: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FlagSignature {
    n: usize,
    dims: Vec<usize>,
}

impl FlagSignature {
    pub fn new(n: usize, dims: Vec<usize>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension(n));
        }
        if dims.iter().any(|&d| d == 0 || d >= n) || dims.windows(2).any(|p| p[0] >= p[1]) {
            return Err(Error::Dimension(format!("dims {dims:?} must increase strictly within 1..{}", n - 1)));
        }
        Ok(Self { n, dims })
    }

    pub fn from_theta(n: usize, theta: &ThetaSet) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension(n));
        }
        theta.validate(n)?;
        Ok(Self { n, dims: (1..n).filter(|d| !theta.contains(*d)).collect() })
    }

    /// The full flag manifold, `Θ = ∅`.
    pub fn maximal(n: usize) -> Result<Self> {
        Self::from_theta(n, &ThetaSet::empty())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn theta(&self) -> ThetaSet {
        let kept: BTreeSet<usize> = self.dims.iter().copied().collect();
        ThetaSet::new(self.n, (1..self.n).filter(|d| !kept.contains(d))).expect("indices in range")
    }

    /// `Θ = Λ`: the one-point manifold.
    pub fn is_degenerate(&self) -> bool {
        self.dims.is_empty()
    }

    /// Real dimension of `F_Θ`.
    pub fn manifold_dimension(&self) -> usize {
        let mut cuts = vec![0];
        cuts.extend_from_slice(&self.dims);
        cuts.push(self.n);
        let sq: usize = cuts.windows(2).map(|w| (w[1] - w[0]).pow(2)).sum();
        (self.n * self.n - sq) / 2
    }

    /// Length of the projector feature vector used by [`FlagPoint::features`].
    pub fn feature_len(&self) -> usize {
        self.dims.len() * self.n * (self.n + 1) / 2
    }
}

/// A point of `F_Θ`.
#[derive(Clone, Debug, PartialEq)]
pub struct FlagPoint {
    frame: DMatrix<f64>,
    signature: FlagSignature,
}

impl FlagPoint {
    /// Wraps an orthonormal frame; fails if `frameᵀ·frame` is not the
    /// identity within [`TOL_FRAME`].
    pub fn new(frame: DMatrix<f64>, signature: FlagSignature) -> Result<Self> {
        let n = signature.n();
        if frame.shape() != (n, n) {
            return Err(Error::Dimension(format!("frame is {:?}, expected {n}x{n}", frame.shape())));
        }
        let defect = (frame.transpose() * &frame - DMatrix::<f64>::identity(n, n)).norm();
        if defect > TOL_FRAME {
            return Err(Error::Dimension(format!("frame is not orthonormal (defect {defect:.3e})")));
        }
        Ok(Self { frame, signature })
    }

    /// Builds the flag whose `d`-dimensional member is spanned by the first
    /// `d` columns of an arbitrary invertible `basis`.
    pub fn from_basis(basis: &DMatrix<f64>, signature: FlagSignature) -> Result<Self> {
        let n = signature.n();
        if basis.shape() != (n, n) {
            return Err(Error::Dimension(format!("basis is {:?}, expected {n}x{n}", basis.shape())));
        }
        Ok(Self { frame: orthonormalize(basis)?, signature })
    }

    pub fn frame(&self) -> &DMatrix<f64> {
        &self.frame
    }

    pub fn signature(&self) -> &FlagSignature {
        &self.signature
    }

    pub fn n(&self) -> usize {
        self.signature.n()
    }

    /// Orthogonal projector onto the `d`-dimensional member.
    pub fn projector_of_dim(&self, d: usize) -> DMatrix<f64> {
        let cols = self.frame.columns(0, d);
        cols * cols.transpose()
    }

    pub fn projectors(&self) -> Vec<DMatrix<f64>> {
        self.signature.dims.iter().map(|&d| self.projector_of_dim(d)).collect()
    }

    /// Upper triangles of the projectors, off-diagonal entries scaled by
    /// `√2`, so the Euclidean distance of one block is the Frobenius
    /// distance of the projectors.
    pub fn features(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.signature.feature_len());
        self.write_features(&mut out);
        out
    }

    pub(crate) fn write_features(&self, out: &mut Vec<f64>) {
        let n = self.n();
        for &d in &self.signature.dims {
            for r in 0..n {
                for c in r..n {
                    let mut s = 0.0;
                    for k in 0..d {
                        s += self.frame[(r, k)] * self.frame[(c, k)];
                    }
                    out.push(if r == c { s } else { s * std::f64::consts::SQRT_2 });
                }
            }
        }
    }

    /// Frame in row-major order.
    pub fn to_row_major(&self) -> Vec<f64> {
        let n = self.n();
        (0..n).flat_map(|r| (0..n).map(move |c| (r, c))).map(|rc| self.frame[rc]).collect()
    }

    pub fn from_row_major(data: &[f64], signature: FlagSignature) -> Result<Self> {
        let n = signature.n();
        if data.len() != n * n {
            return Err(Error::Dimension(format!("{} entries for a {n}x{n} frame", data.len())));
        }
        Self::new(DMatrix::from_row_slice(n, n, data), signature)
    }
}

/// Gram–Schmidt with one reorthogonalization pass; keeps every leading
/// column span, fixes signs so the triangular factor has positive diagonal.
pub fn orthonormalize(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (rows, cols) = m.shape();
    let scale = (0..cols).map(|j| m.column(j).norm()).fold(0.0, f64::max);
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::Singular("zero or non-finite matrix".into()));
    }
    let mut q = DMatrix::<f64>::zeros(rows, cols);
    for j in 0..cols {
        let mut v = m.column(j).into_owned();
        for _ in 0..2 {
            for k in 0..j {
                let qk = q.column(k);
                let proj = qk.dot(&v);
                v.axpy(-proj, &qk, 1.0);
            }
        }
        let norm = v.norm();
        if norm <= SINGULAR_PIVOT * scale {
            return Err(Error::Singular(format!("column {j} is dependent on its predecessors")));
        }
        q.set_column(j, &(v / norm));
    }
    Ok(q)
}

/// The origin `b_Θ`: the flag of coordinate subspaces.
pub fn base_point(signature: &FlagSignature) -> FlagPoint {
    let n = signature.n();
    FlagPoint { frame: DMatrix::identity(n, n), signature: signature.clone() }
}

fn check_same_signature(x: &FlagPoint, y: &FlagPoint) -> Result<()> {
    if x.signature != y.signature {
        return Err(Error::Dimension(format!(
            "signatures differ: n={} dims={:?} vs n={} dims={:?}",
            x.n(),
            x.signature.dims,
            y.n(),
            y.signature.dims
        )));
    }
    Ok(())
}

/// Largest Frobenius distance between corresponding projectors.
pub fn distance(x: &FlagPoint, y: &FlagPoint) -> Result<f64> {
    check_same_signature(x, y)?;
    Ok(feature_distance(&x.features(), &y.features(), x.n()))
}

/// Distance between two feature vectors of the same signature.
pub fn feature_distance(a: &[f64], b: &[f64], n: usize) -> f64 {
    let block = n * (n + 1) / 2;
    a.chunks(block)
        .zip(b.chunks(block))
        .map(|(p, q)| p.iter().zip(q).map(|(s, t)| (s - t) * (s - t)).sum::<f64>())
        .fold(0.0, f64::max)
        .sqrt()
}

/// Applies `g ∈ GL(n)` to the flag: `V_d ↦ g·V_d`.
pub fn act(g: &DMatrix<f64>, x: &FlagPoint) -> Result<FlagPoint> {
    let n = x.n();
    if g.shape() != (n, n) {
        return Err(Error::Dimension(format!("matrix is {:?}, flag lives in R^{n}", g.shape())));
    }
    Ok(FlagPoint { frame: orthonormalize(&(g * &x.frame))?, signature: x.signature.clone() })
}

/// Canonical projection `F_Θ₁ → F_Θ₂` for `Θ₁ ⊆ Θ₂`.
pub fn project(x: &FlagPoint, theta2: &ThetaSet) -> Result<FlagPoint> {
    let n = x.n();
    theta2.validate(n)?;
    let theta1 = x.signature.theta();
    if !theta1.is_subset(theta2) {
        return Err(Error::Projection(format!("{theta1} is not contained in {theta2}")));
    }
    Ok(FlagPoint { frame: x.frame.clone(), signature: FlagSignature::from_theta(n, theta2)? })
}

/// Haar-distributed random flag.
pub fn random_point(signature: &FlagSignature, rng: &mut ChaCha8Rng) -> FlagPoint {
    let n = signature.n();
    loop {
        let g = DMatrix::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(rng));
        if let Ok(frame) = orthonormalize(&g) {
            return FlagPoint { frame, signature: signature.clone() };
        }
    }
}

/// Line in `R^2` at angle `theta`, as a point of `RP^1`.
pub fn line_at_angle(theta: f64) -> FlagPoint {
    let (s, c) = theta.sin_cos();
    let frame = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
    FlagPoint { frame, signature: FlagSignature { n: 2, dims: vec![1] } }
}

/// A discretization of `F_Θ` into nearest-center cells.
#[derive(Clone, Debug)]
pub struct CellComplex {
    signature: FlagSignature,
    centers: Vec<FlagPoint>,
    radius: f64,
    neighbors: Vec<Vec<usize>>,
    resolution: usize,
    seed: u64,
    features: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CellComplexFile {
    n: usize,
    dims: Vec<usize>,
    resolution: usize,
    seed: u64,
    radius: f64,
    /// Row-major frames, concatenated.
    centers: Vec<f64>,
    neighbors: Vec<Vec<usize>>,
}

impl CellComplex {
    fn assemble(signature: FlagSignature, centers: Vec<FlagPoint>, radius: f64, resolution: usize, seed: u64) -> Self {
        let features = centers.iter().flat_map(|c| c.features()).collect();
        let mut complex = Self { signature, centers, radius, neighbors: Vec::new(), resolution, seed, features };
        complex.neighbors = complex.compute_neighbors();
        complex
    }

    /// Cells whose centers lie within `2.2 · radius`.
    fn compute_neighbors(&self) -> Vec<Vec<usize>> {
        let reach = 2.2 * self.radius;
        (0..self.len())
            .into_par_iter()
            .map(|i| {
                let f = self.center_features(i);
                (0..self.len())
                    .filter(|&j| j != i && feature_distance(f, self.center_features(j), self.n()) <= reach)
                    .collect()
            })
            .collect()
    }

    pub fn signature(&self) -> &FlagSignature {
        &self.signature
    }

    pub fn n(&self) -> usize {
        self.signature.n()
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[FlagPoint] {
        &self.centers
    }

    pub fn center(&self, cell: usize) -> &FlagPoint {
        &self.centers[cell]
    }

    /// Covering radius: every point is within this distance of some center.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn neighbors(&self, cell: usize) -> &[usize] {
        &self.neighbors[cell]
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub(crate) fn center_features(&self, cell: usize) -> &[f64] {
        let len = self.signature.feature_len();
        &self.features[cell * len..(cell + 1) * len]
    }

    /// Nearest center, ties broken by the lowest index.
    pub fn locate(&self, x: &FlagPoint) -> Result<usize> {
        if x.signature != self.signature {
            return Err(Error::Dimension("point and complex have different signatures".into()));
        }
        Ok(self.locate_features(&x.features()).0)
    }

    /// Nearest center together with its distance.
    pub(crate) fn locate_features(&self, f: &[f64]) -> (usize, f64) {
        let n = self.n();
        let mut best = (0, f64::INFINITY);
        for i in 0..self.len() {
            let d = feature_distance(f, self.center_features(i), n);
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }

    /// Nearest cell and every cell whose center is within `eps`.
    pub(crate) fn locate_with_ball(&self, f: &[f64], eps: f64, ball: &mut Vec<usize>) -> usize {
        let n = self.n();
        let mut best = (0, f64::INFINITY);
        ball.clear();
        for i in 0..self.len() {
            let d = feature_distance(f, self.center_features(i), n);
            if d < best.1 {
                best = (i, d);
            }
            if d <= eps {
                ball.push(i);
            }
        }
        best.0
    }

    /// Distance from `x` to the nearest center in `cells`.
    pub fn distance_to_cells(&self, f: &[f64], cells: &[usize]) -> f64 {
        cells.iter().map(|&c| feature_distance(f, self.center_features(c), self.n())).fold(f64::INFINITY, f64::min)
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let file = CellComplexFile {
            n: self.n(),
            dims: self.signature.dims.clone(),
            resolution: self.resolution,
            seed: self.seed,
            radius: self.radius,
            centers: self.centers.iter().flat_map(|c| c.to_row_major()).collect(),
            neighbors: self.neighbors.clone(),
        };
        fs::write(path, serde_json::to_string(&file)?)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let file: CellComplexFile = serde_json::from_str(&fs::read_to_string(path)?)?;
        let signature = FlagSignature::new(file.n, file.dims)?;
        let nn = file.n * file.n;
        if !file.centers.len().is_multiple_of(nn) || file.neighbors.len() != file.centers.len() / nn {
            return Err(Error::Config(format!("{}: inconsistent cell complex layout", path.display())));
        }
        let centers = file
            .centers
            .chunks(nn)
            .map(|c| FlagPoint::from_row_major(c, signature.clone()))
            .collect::<Result<Vec<_>>>()?;
        let features = centers.iter().flat_map(|c| c.features()).collect();
        Ok(Self {
            signature,
            centers,
            radius: file.radius,
            neighbors: file.neighbors,
            resolution: file.resolution,
            seed: file.seed,
            features,
        })
    }
}

/// Discretizes `F_Θ`.
///
/// `RP^1` gets a uniform grid of `resolution` angles starting at `span{e_1}`.
/// Other manifolds get `resolution` centers chosen by greedy farthest-point
/// selection from a seeded Haar sample (eight candidates per cell), starting
/// at `b_Θ`; the radius is the largest nearest-center distance over a probe
/// sample of ten points per cell. The one-point manifold has a single cell.
pub fn discretize(signature: &FlagSignature, resolution: usize, seed: u64) -> Result<CellComplex> {
    discretize_anchored(signature, resolution, seed, &[])
}

/// Like [`discretize`], but the farthest-point selection starts from `b_Θ`
/// followed by `anchors`, so each anchor is a cell center. Anchors closer
/// than `TOL_FRAME` to an earlier center are dropped. The `RP^1` grid ignores
/// anchors.
pub fn discretize_anchored(
    signature: &FlagSignature,
    resolution: usize,
    seed: u64,
    anchors: &[FlagPoint],
) -> Result<CellComplex> {
    if let Some(a) = anchors.iter().find(|a| a.signature() != signature) {
        return Err(Error::Dimension(format!(
            "anchor with dims {:?} for a complex with dims {:?}",
            a.signature().dims(),
            signature.dims()
        )));
    }
    if signature.is_degenerate() {
        return Ok(CellComplex::assemble(signature.clone(), vec![base_point(signature)], 0.0, resolution, seed));
    }
    if resolution < 8 {
        return Err(Error::Resolution(resolution));
    }
    if signature.n() == 2 {
        let step = std::f64::consts::PI / resolution as f64;
        let centers = (0..resolution).map(|k| line_at_angle(k as f64 * step)).collect();
        let radius = std::f64::consts::SQRT_2 * (step / 2.0).sin();
        return Ok(CellComplex::assemble(signature.clone(), centers, radius, resolution, seed));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool: Vec<FlagPoint> = (0..8 * resolution).map(|_| random_point(signature, &mut rng)).collect();
    let pool_features: Vec<Vec<f64>> = pool.iter().map(|p| p.features()).collect();
    let n = signature.n();

    let mut nearest = vec![f64::INFINITY; pool.len()];
    let mut centers: Vec<FlagPoint> = Vec::new();
    let admit = |p: &FlagPoint, centers: &mut Vec<FlagPoint>, nearest: &mut Vec<f64>| {
        let pf = p.features();
        nearest.par_iter_mut().zip(pool_features.par_iter()).for_each(|(best, f)| {
            let d = feature_distance(f, &pf, n);
            if d < *best {
                *best = d;
            }
        });
        centers.push(p.clone());
    };
    admit(&base_point(signature), &mut centers, &mut nearest);
    for a in anchors {
        let af = a.features();
        if centers.len() < resolution && centers.iter().all(|c| feature_distance(&c.features(), &af, n) > TOL_FRAME) {
            admit(a, &mut centers, &mut nearest);
        }
    }
    while centers.len() < resolution {
        let (pick, _) = nearest
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc });
        admit(&pool[pick], &mut centers, &mut nearest);
    }

    let mut complex = CellComplex::assemble(signature.clone(), centers, 0.0, resolution, seed);
    let mut probe_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5bd1_e995_5bd1_e995);
    let probes: Vec<Vec<f64>> =
        (0..10 * resolution).map(|_| random_point(signature, &mut probe_rng).features()).collect();
    let radius = probes.par_iter().map(|f| complex.locate_features(f).1).reduce(|| 0.0, f64::max);
    complex.radius = radius;
    complex.neighbors = complex.compute_neighbors();
    Ok(complex)
}

/// Precomputed `π_i` on cells: maps each cell of the maximal flag to the
/// cell of `F_i = F_{{α_i}}` containing the projection of its center.
#[derive(Clone, Debug)]
pub struct FiberMap {
    pub index: usize,
    image: Vec<usize>,
    fine_cells: usize,
}

impl FiberMap {
    pub fn new(complex_f: &CellComplex, complex_fi: &CellComplex, i: usize) -> Result<Self> {
        let n = complex_f.n();
        if complex_fi.n() != n {
            return Err(Error::Dimension(format!("complexes for n = {n} and n = {}", complex_fi.n())));
        }
        if !complex_f.signature().theta().is_empty() {
            return Err(Error::Dimension("fiber saturation needs the maximal flag manifold".into()));
        }
        let theta_i = ThetaSet::new(n, [i])?;
        if complex_fi.signature().theta() != theta_i {
            return Err(Error::Dimension(format!("second complex is not F_{{{i}}}")));
        }
        let image = complex_f
            .centers()
            .par_iter()
            .map(|c| complex_fi.locate(&project(c, &theta_i)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { index: i, image, fine_cells: complex_f.len() })
    }

    /// `γ_i(X) = π_i⁻¹ π_i(X)` on cells.
    pub fn saturate(&self, cells: &BTreeSet<usize>) -> BTreeSet<usize> {
        let hit: BTreeSet<usize> = cells.iter().map(|&c| self.image[c]).collect();
        (0..self.fine_cells).filter(|c| hit.contains(&self.image[*c])).collect()
    }
}

/// One-shot `γ_i` on a set of maximal-flag cells.
pub fn fiber_saturate(
    cells: &BTreeSet<usize>,
    i: usize,
    complex_f: &CellComplex,
    complex_fi: &CellComplex,
) -> Result<BTreeSet<usize>> {
    Ok(FiberMap::new(complex_f, complex_fi, i)?.saturate(cells))
}

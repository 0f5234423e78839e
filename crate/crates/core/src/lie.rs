//! Concrete structure of `sl(n, R)`: diagonal Cartan subalgebra, roots,
//! split decomposition `X = g·H·g⁻¹` with `H` in the closed Weyl chamber,
//! and the fixed-point components of the induced flows on flag manifolds.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flag::{FlagPoint, FlagSignature};
use crate::weyl::{self, ThetaSet, WeylElement};

/// Default relative tolerance for eigenvalue ties.
pub const TOL_ROOT: f64 = 1e-9;

/// Tolerance on `|tr X|`, relative to `max(1, ‖X‖_F)`.
pub const TOL_TRACE: f64 = 1e-9;

/// Imaginary parts above this (relative to `‖X‖_F`) make a spectrum complex.
const TOL_IMAG: f64 = 1e-7;

/// Singular values below this (relative to `‖X‖_F`) count as kernel.
const TOL_KERNEL: f64 = 1e-6;

/// The root `e_i - e_j`, 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Root {
    pub i: usize,
    pub j: usize,
}

impl Root {
    pub fn is_positive(&self) -> bool {
        self.i < self.j
    }

    pub fn negate(&self) -> Root {
        Root { i: self.j, j: self.i }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RootSystem {
    pub n: usize,
    /// `α_k = e_k - e_{k+1}`, `k = 1..n-1`.
    pub simple: Vec<Root>,
    pub positive: Vec<Root>,
}

impl RootSystem {
    /// Negative roots, `Π⁻ = -Π⁺`.
    pub fn negative(&self) -> Vec<Root> {
        self.positive.iter().map(Root::negate).collect()
    }
}

pub fn simple_roots(n: usize) -> Result<RootSystem> {
    if n < 2 {
        return Err(Error::InvalidDimension(n));
    }
    let simple = (1..n).map(|k| Root { i: k, j: k + 1 }).collect();
    let positive = (1..=n).flat_map(|i| (i + 1..=n).map(move |j| Root { i, j })).collect();
    Ok(RootSystem { n, simple, positive })
}

/// A traceless diagonal matrix, stored by its diagonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CartanElement {
    diag: Vec<f64>,
}

impl CartanElement {
    pub fn new(diag: Vec<f64>) -> Result<Self> {
        if diag.len() < 2 {
            return Err(Error::InvalidDimension(diag.len()));
        }
        let trace: f64 = diag.iter().sum();
        let scale = diag.iter().map(|d| d * d).sum::<f64>().sqrt().max(1.0);
        if trace.abs() > TOL_TRACE * scale {
            return Err(Error::Dimension(format!("diagonal has trace {trace:.3e}")));
        }
        Ok(Self { diag })
    }

    pub fn zero(n: usize) -> Self {
        Self { diag: vec![0.0; n] }
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.diag))
    }

    /// Non-increasing entries, up to `tol`.
    pub fn in_closed_chamber(&self, tol: f64) -> bool {
        self.diag.windows(2).all(|p| p[0] >= p[1] - tol)
    }
}

pub fn eval_root(alpha: &Root, h: &CartanElement) -> Result<f64> {
    let n = h.n();
    if alpha.i == 0 || alpha.j == 0 || alpha.i > n || alpha.j > n || alpha.i == alpha.j {
        return Err(Error::Dimension(format!("root e{}-e{} is not a root of sl({n})", alpha.i, alpha.j)));
    }
    Ok(h.diag[alpha.i - 1] - h.diag[alpha.j - 1])
}

/// `Θ(H) = {α_i : |α_i(H)| ≤ tol_root}`.
pub fn flag_type_of(h: &CartanElement, tol_root: f64) -> Result<ThetaSet> {
    if !h.in_closed_chamber(tol_root) {
        return Err(Error::Chamber(format!("{:?} is not non-increasing", h.diag)));
    }
    let n = h.n();
    ThetaSet::new(n, (1..n).filter(|&i| (h.diag[i - 1] - h.diag[i]).abs() <= tol_root))
}

/// `X = g·diag(H)·g⁻¹` with `H` non-increasing.
#[derive(Clone, Debug)]
pub struct SplitDecomposition {
    /// Unit eigenvectors as columns, ordered like `H`.
    pub g: DMatrix<f64>,
    pub h: CartanElement,
    pub regular: bool,
    /// Tolerance actually used for ties, `tol · ‖X‖_F`.
    pub tol_root: f64,
}

impl SplitDecomposition {
    pub fn n(&self) -> usize {
        self.h.n()
    }

    pub fn theta_h(&self) -> ThetaSet {
        flag_type_of(&self.h, self.tol_root).expect("H is sorted")
    }

    pub fn recompose(&self) -> Result<DMatrix<f64>> {
        let inv = self.g.clone().try_inverse().ok_or_else(|| Error::Singular("eigenvector matrix".into()))?;
        Ok(&self.g * self.h.to_matrix() * inv)
    }
}

/// Splits a traceless matrix with real, semisimple spectrum.
///
/// `tol` is relative to `‖X‖_F`: eigenvalues closer than `tol·‖X‖_F` are
/// merged (their average is used in `H`) and the element is regular only
/// when no merge happened. Complex spectra and nontrivial Jordan blocks are
/// rejected with [`Error::NotSplit`].
pub fn split_decompose(x: &DMatrix<f64>, tol: f64) -> Result<SplitDecomposition> {
    let n = x.nrows();
    if x.ncols() != n {
        return Err(Error::Dimension(format!("matrix is {:?}", x.shape())));
    }
    if n < 2 {
        return Err(Error::InvalidDimension(n));
    }
    let scale = x.norm();
    if x.trace().abs() > TOL_TRACE * scale.max(1.0) {
        return Err(Error::Dimension(format!("matrix has trace {:.3e}", x.trace())));
    }
    if scale == 0.0 {
        return Ok(SplitDecomposition {
            g: DMatrix::identity(n, n),
            h: CartanElement::zero(n),
            regular: false,
            tol_root: 0.0,
        });
    }
    let tol_root = tol * scale;

    let symmetric = (x - x.transpose()).norm() <= 1e-14 * scale;
    let (values, vectors) = if symmetric {
        let eig = SymmetricEigen::new(x.clone());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        (values, Some(vectors))
    } else {
        let spectrum = x.complex_eigenvalues();
        if let Some(z) = spectrum.iter().find(|z| z.im.abs() > TOL_IMAG * scale) {
            return Err(Error::NotSplit(format!("complex eigenvalue {:.6}{:+.6}i", z.re, z.im)));
        }
        let mut values: Vec<f64> = spectrum.iter().map(|z| z.re).collect();
        values.sort_by(|a, b| b.total_cmp(a));
        (values, None)
    };

    // Cluster near-equal eigenvalues.
    let mut clusters: Vec<Vec<usize>> = vec![vec![0]];
    for k in 1..n {
        if values[k - 1] - values[k] <= tol_root {
            clusters.last_mut().unwrap().push(k);
        } else {
            clusters.push(vec![k]);
        }
    }
    let mut diag = vec![0.0; n];
    for cl in &clusters {
        let mean = cl.iter().map(|&k| values[k]).sum::<f64>() / cl.len() as f64;
        for &k in cl {
            diag[k] = mean;
        }
    }
    let mean = diag.iter().sum::<f64>() / n as f64;
    diag.iter_mut().for_each(|d| *d -= mean);

    let mut g = match vectors {
        Some(v) => v,
        None => {
            let mut g = DMatrix::<f64>::zeros(n, n);
            for cl in &clusters {
                let basis = eigenspace(x, diag[cl[0]] + mean, cl.len(), scale)?;
                for (col, &k) in cl.iter().enumerate() {
                    g.set_column(k, &basis.column(col));
                }
            }
            g
        }
    };
    normalize_columns(&mut g);
    if g.determinant() < 0.0 {
        let last = g.column(n - 1).clone_owned();
        g.set_column(n - 1, &(-last));
    }
    if g.rank(1e-10) < n {
        return Err(Error::NotSplit("eigenvectors do not span R^n".into()));
    }

    Ok(SplitDecomposition { g, h: CartanElement { diag }, regular: clusters.len() == n, tol_root })
}

/// Orthonormal basis of `ker(X - λI)`, which must have dimension `mult`.
fn eigenspace(x: &DMatrix<f64>, lambda: f64, mult: usize, scale: f64) -> Result<DMatrix<f64>> {
    let n = x.nrows();
    let shifted = x - DMatrix::<f64>::identity(n, n) * lambda;
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let kernel_dim = idx.iter().filter(|&&k| svd.singular_values[k] <= TOL_KERNEL * scale).count();
    if kernel_dim < mult {
        return Err(Error::NotSplit(format!(
            "eigenvalue {lambda:.6} has algebraic multiplicity {mult} but geometric multiplicity {kernel_dim}"
        )));
    }
    Ok(DMatrix::from_fn(n, mult, |r, c| v_t[(idx[c], r)]))
}

/// Unit columns whose first entry of non-negligible size is positive.
fn normalize_columns(g: &mut DMatrix<f64>) {
    for mut col in g.column_iter_mut() {
        let norm = col.norm();
        col /= norm;
        if let Some(first) = col.iter().copied().find(|v| v.abs() > 1e-12) {
            if first < 0.0 {
                col.neg_mut();
            }
        }
    }
}

/// Basis of one eigenspace of `H`, with the number of basis vectors each
/// member of the flag takes from it.
#[derive(Clone, Debug)]
pub struct EigenBlock {
    pub basis: DMatrix<f64>,
    /// `dim(V_d ∩ E)` for each kept dimension `d`, in signature order.
    pub counts: Vec<usize>,
}

/// A connected component `g·fix_Θ(H, w)` of the fixed-point set.
#[derive(Clone, Debug)]
pub struct FixedComponent {
    pub weyl_label: WeylElement,
    pub point: FlagPoint,
    pub dimension: usize,
    pub generators: Vec<EigenBlock>,
}

impl FixedComponent {
    /// Whether `x` lies on this component: every member of the flag must
    /// split along the eigenspaces with the recorded dimensions.
    pub fn contains(&self, x: &FlagPoint, tol: f64) -> bool {
        if x.signature() != self.point.signature() {
            return false;
        }
        let frame = x.frame();
        for (slot, &d) in x.signature().dims().iter().enumerate() {
            for block in &self.generators {
                let b = block.basis.ncols();
                let mut joint = DMatrix::<f64>::zeros(x.n(), d + b);
                joint.columns_mut(0, d).copy_from(&frame.columns(0, d));
                joint.columns_mut(d, b).copy_from(&block.basis);
                let intersection = d + b - joint.rank(tol);
                if intersection != block.counts[slot] {
                    return false;
                }
            }
        }
        true
    }
}

/// Components `fix_Θ(X, w)` for representatives `w` of `W_{Θ(H)} \ W / W_Θ`.
///
/// `w_reps` must contain exactly one element from every double coset.
pub fn fixed_components(
    d: &SplitDecomposition,
    theta: &ThetaSet,
    w_reps: &[WeylElement],
) -> Result<Vec<FixedComponent>> {
    let n = d.n();
    let theta_h = d.theta_h();
    let blocks = weyl::double_cosets(n, &theta_h, theta)?;
    let mut hit = vec![false; blocks.len()];
    for w in w_reps {
        if w.n() != n {
            return Err(Error::Label(format!("{w} is not in S_{n}")));
        }
        let k = weyl::block_of(&blocks, w).expect("partition covers W");
        if std::mem::replace(&mut hit[k], true) {
            return Err(Error::Label(format!("{w} repeats the double coset of {}", blocks[k].representative)));
        }
    }
    if hit.iter().any(|h| !h) {
        return Err(Error::Label(format!(
            "{} representatives for {} double cosets W_{theta_h}\\W/W_{theta}",
            w_reps.len(),
            blocks.len()
        )));
    }

    let signature = FlagSignature::from_theta(n, theta)?;
    let eigen_blocks = theta_h.blocks(n);
    w_reps
        .iter()
        .map(|w| {
            let permuted = DMatrix::from_fn(n, n, |r, c| d.g[(r, w.apply(c + 1) - 1)]);
            let point = FlagPoint::from_basis(&permuted, signature.clone())?;
            let mut dimension = 0;
            let mut generators = Vec::with_capacity(eigen_blocks.len());
            for block in &eigen_blocks {
                let counts: Vec<usize> = signature
                    .dims()
                    .iter()
                    .map(|&dd| (1..=dd).filter(|&i| block.contains(&w.apply(i))).count())
                    .collect();
                let b = block.len();
                let mut cuts = vec![0];
                cuts.extend(counts.iter().copied());
                cuts.push(b);
                cuts.dedup();
                let sq: usize = cuts.windows(2).map(|p| (p[1] - p[0]).pow(2)).sum();
                dimension += (b * b - sq) / 2;
                let cols: Vec<usize> = block.iter().map(|&k| k - 1).collect();
                let basis = crate::flag::orthonormalize(&d.g.select_columns(&cols))?;
                generators.push(EigenBlock { basis, counts });
            }
            Ok(FixedComponent { weyl_label: w.clone(), point, dimension, generators })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flag::{self, distance, line_at_angle};

    fn cartan(d: &[f64]) -> CartanElement {
        CartanElement::new(d.to_vec()).unwrap()
    }

    #[test]
    fn root_counts() {
        let r2 = simple_roots(2).unwrap();
        assert_eq!((r2.simple.len(), r2.positive.len()), (1, 1));
        let r3 = simple_roots(3).unwrap();
        assert_eq!((r3.simple.len(), r3.positive.len()), (2, 3));
        let r4 = simple_roots(4).unwrap();
        assert_eq!((r4.simple.len(), r4.positive.len()), (3, 6));
        assert_eq!(r4.positive.len(), (1..=4).flat_map(|i| (i + 1..=4).map(move |j| (i, j))).count());
        assert!(r3.negative().iter().all(|r| !r.is_positive()));
    }

    #[test]
    fn root_evaluation() {
        let a1 = Root { i: 1, j: 2 };
        assert_eq!(eval_root(&a1, &cartan(&[1.0, -1.0])).unwrap(), 2.0);
        assert_eq!(eval_root(&a1, &CartanElement::zero(3)).unwrap(), 0.0);
        assert_eq!(eval_root(&Root { i: 1, j: 3 }, &cartan(&[2.0, 0.0, -2.0])).unwrap(), 4.0);
        assert!(eval_root(&Root { i: 1, j: 3 }, &cartan(&[1.0, -1.0])).is_err());
    }

    #[test]
    fn flag_types() {
        assert!(flag_type_of(&cartan(&[2.0, 1.0, -3.0]), 1e-9).unwrap().is_empty());
        assert_eq!(flag_type_of(&cartan(&[1.0, 1.0, -2.0]), 1e-9).unwrap().to_vec(), vec![1]);
        assert_eq!(flag_type_of(&CartanElement::zero(4), 1e-9).unwrap(), ThetaSet::full(4));
        assert!(matches!(flag_type_of(&cartan(&[-1.0, 1.0]), 1e-9), Err(Error::Chamber(_))));
        assert!(CartanElement::new(vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn split_of_diagonal_is_trivial() {
        let x = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0, -4.0]));
        let d = split_decompose(&x, TOL_ROOT).unwrap();
        assert!(d.regular);
        assert!((&d.g - DMatrix::<f64>::identity(3, 3)).norm() < 1e-12);
        assert_eq!(d.h.diag(), &[3.0, 1.0, -4.0]);
    }

    #[test]
    fn split_of_rotation_fails() {
        let x = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!(matches!(split_decompose(&x, TOL_ROOT), Err(Error::NotSplit(_))));
    }

    #[test]
    fn split_of_jordan_block_fails() {
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(split_decompose(&x, TOL_ROOT), Err(Error::NotSplit(_))));
        let x = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -2.0]);
        assert!(matches!(split_decompose(&x, TOL_ROOT), Err(Error::NotSplit(_))));
    }

    #[test]
    fn split_of_non_normal_matrix_round_trips() {
        let p = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.5, 0.0, 0.5, -1.0, 0.3, 0.0, -1.5]);
        let h = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-2.5, 2.0, 0.5]));
        let x = &p * h * p.clone().try_inverse().unwrap();
        let d = split_decompose(&x, TOL_ROOT).unwrap();
        assert!(d.regular);
        assert!((d.h.diag()[0] - 2.0).abs() < 1e-10 && (d.h.diag()[2] + 2.5).abs() < 1e-10);
        assert!(d.h.in_closed_chamber(0.0));
        assert!((d.recompose().unwrap() - &x).norm() < 1e-10);
        assert!(d.g.determinant() > 0.0);
    }

    #[test]
    fn split_with_repeated_eigenvalue() {
        // conjugate of diag(1, 1, -2)
        let p = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 2.0]);
        let h = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0, -2.0]));
        let x = &p * h * p.clone().try_inverse().unwrap();
        let d = split_decompose(&x, TOL_ROOT).unwrap();
        assert!(!d.regular);
        assert_eq!(d.theta_h().to_vec(), vec![1]);
        assert!((d.recompose().unwrap() - &x).norm() < 1e-9);
    }

    #[test]
    fn components_of_diag_sl2() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let d = split_decompose(&x, TOL_ROOT).unwrap();
        let reps = weyl::coset_representatives(2, &ThetaSet::empty()).unwrap();
        let comps = fixed_components(&d, &ThetaSet::empty(), &reps).unwrap();
        assert_eq!(comps.len(), 2);
        assert!(comps[0].weyl_label.is_identity());
        assert!(distance(&comps[0].point, &line_at_angle(0.0)).unwrap() < 1e-12);
        assert!(distance(&comps[1].point, &line_at_angle(std::f64::consts::FRAC_PI_2)).unwrap() < 1e-12);
        assert!(comps.iter().all(|c| c.dimension == 0));
    }

    #[test]
    fn components_count_cosets_for_regular_elements() {
        let x = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 0.5, -0.5, -2.0]));
        let d = split_decompose(&x, TOL_ROOT).unwrap();
        for theta in ThetaSet::all(4) {
            let reps = weyl::coset_representatives(4, &theta).unwrap();
            let comps = fixed_components(&d, &theta, &reps).unwrap();
            let expected = 24 / weyl::subgroup(4, &theta).unwrap().len();
            assert_eq!(comps.len(), expected);
        }
    }

    #[test]
    fn components_of_degenerate_h() {
        // Enumerating the flags assembled from eigenspace blocks of
        // diag(1, 1, -2): the line either lies in the plane E_1 or is E_2.
        // Full flags inside E_1 (line ⊂ E_1, plane = E_1) form an RP^1;
        // line in E_1 with plane ⊃ E_2 is another RP^1; line = E_2 fixes the
        // plane to E_2 + (line in E_1), another RP^1. So three components,
        // each of dimension 1.
        let x = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0, -2.0]));
        let d = split_decompose(&x, TOL_ROOT).unwrap();
        let theta_h = d.theta_h();
        let reps: Vec<WeylElement> = weyl::double_cosets(3, &theta_h, &ThetaSet::empty())
            .unwrap()
            .into_iter()
            .map(|b| b.representative)
            .collect();
        let comps = fixed_components(&d, &ThetaSet::empty(), &reps).unwrap();
        assert_eq!(comps.len(), 3);
        assert!(comps[0].weyl_label.is_identity());
        assert_eq!(comps.iter().map(|c| c.dimension).collect::<Vec<_>>(), vec![1, 1, 1]);
        // rotating inside E_1 keeps the e-component; moving the line out of E_1 does not
        let (s, c) = 0.7f64.sin_cos();
        let rot = DMatrix::from_row_slice(3, 3, &[c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0]);
        let moved = flag::act(&rot, &comps[0].point).unwrap();
        assert!(comps[0].contains(&moved, 1e-9));
        let tilt = DMatrix::from_row_slice(3, 3, &[c, 0.0, -s, 0.0, 1.0, 0.0, s, 0.0, c]);
        assert!(!comps[0].contains(&flag::act(&tilt, &comps[0].point).unwrap(), 1e-9));
        // on F_{2} (lines), the line in E_1 gives a projective line of fixed points
        let theta = ThetaSet::new(3, [2]).unwrap();
        let reps: Vec<WeylElement> =
            weyl::double_cosets(3, &theta_h, &theta).unwrap().into_iter().map(|b| b.representative).collect();
        let comps = fixed_components(&d, &theta, &reps).unwrap();
        assert_eq!(comps.iter().map(|c| c.dimension).collect::<Vec<_>>(), vec![1, 0]);
    }

    #[test]
    fn inconsistent_representatives_are_rejected() {
        let x = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0, -2.0]));
        let d = split_decompose(&x, TOL_ROOT).unwrap();
        let all = weyl::all_elements(3);
        assert!(matches!(fixed_components(&d, &ThetaSet::empty(), &all), Err(Error::Label(_))));
        assert!(matches!(fixed_components(&d, &ThetaSet::empty(), &all[..1]), Err(Error::Label(_))));
    }
}

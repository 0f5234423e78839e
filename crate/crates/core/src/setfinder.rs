//! Set-oriented computation on a cell complex: one-step transition graphs,
//! control sets as strongly connected components of the exact graph, chain
//! control sets as components of the ε-inflated graph, their Weyl labels
//! from regular fixed points, and domains of attraction.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use nalgebra::DMatrix;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{drift_matrix, BilinearSystem, ControlSample, Propagator};
use crate::error::{Error, Result};
use crate::flag::{self, CellComplex, FiberMap, FlagPoint};
use crate::lie::{self, TOL_ROOT};
use crate::weyl::{self, ThetaSet, WeylElement};

/// Attempts at drawing a perturbed sample that stays in its cell.
const SAMPLE_TRIES: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub target: usize,
    /// Index into the graph's control list.
    pub control: usize,
}

/// One-step transition relation on cells for flight time `tau`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellGraph {
    pub tau: f64,
    pub epsilon: f64,
    pub controls: Vec<Vec<f64>>,
    pub samples_per_cell: usize,
    pub seed: u64,
    /// Sorted, duplicate-free out-edges per cell.
    pub edges: Vec<Vec<Edge>>,
}

impl CellGraph {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    /// Targets of `cell` over all controls.
    pub fn successors(&self, cell: usize) -> BTreeSet<usize> {
        self.edges[cell].iter().map(|e| e.target).collect()
    }

    fn union_adjacency(&self) -> Vec<Vec<usize>> {
        self.edges
            .iter()
            .map(|es| {
                let mut t: Vec<usize> = es.iter().map(|e| e.target).collect();
                t.dedup();
                t
            })
            .collect()
    }

    fn reversed_adjacency(&self) -> Vec<Vec<usize>> {
        let mut rev = vec![Vec::new(); self.len()];
        for (c, targets) in self.union_adjacency().into_iter().enumerate() {
            for t in targets {
                rev[t].push(c);
            }
        }
        rev
    }
}

/// Images of the sampled points of every cell under every constant control
/// for time `tau`. Computed once and turned into graphs for several ε.
#[derive(Clone, Debug)]
pub struct FlowImages {
    pub tau: f64,
    pub controls: Vec<Vec<f64>>,
    pub samples_per_cell: usize,
    pub seed: u64,
    feature_len: usize,
    /// `[cell][control][sample]` feature vectors, flattened.
    data: Vec<f64>,
}

impl FlowImages {
    fn image(&self, cell: usize, control: usize, sample: usize) -> &[f64] {
        let k = (cell * self.controls.len() + control) * self.samples_per_cell + sample;
        &self.data[k * self.feature_len..(k + 1) * self.feature_len]
    }

    pub fn cells(&self) -> usize {
        self.data.len() / (self.feature_len * self.controls.len() * self.samples_per_cell)
    }
}

/// The center of `cell` and `count - 1` seeded perturbations that stay in it.
pub fn sample_cell(complex: &CellComplex, cell: usize, count: usize, seed: u64) -> Vec<FlagPoint> {
    let center = complex.center(cell);
    let mut samples = Vec::with_capacity(count);
    samples.push(center.clone());
    if count <= 1 || complex.radius() == 0.0 {
        samples.resize(count.max(1), center.clone());
        return samples;
    }
    let n = complex.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(cell as u64);
    while samples.len() < count {
        let mut accepted = None;
        for _ in 0..SAMPLE_TRIES {
            let raw = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
            let skew = &raw - raw.transpose();
            let norm = skew.norm();
            if norm == 0.0 {
                continue;
            }
            let step: f64 = rng.random::<f64>() * complex.radius();
            let rotation = (skew * (step / norm)).exp();
            if let Ok(p) = flag::act(&rotation, center) {
                if complex.locate(&p).ok() == Some(cell) {
                    accepted = Some(p);
                    break;
                }
            }
        }
        samples.push(accepted.unwrap_or_else(|| center.clone()));
    }
    samples
}

/// Flows the samples of every cell for time `tau` under each control.
pub fn flow_images(
    sys: &BilinearSystem,
    complex: &CellComplex,
    tau: f64,
    controls: &[Vec<f64>],
    samples_per_cell: usize,
    seed: u64,
) -> Result<FlowImages> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Config(format!("tau = {tau} must be positive")));
    }
    if controls.is_empty() {
        return Err(Error::Config("empty control list".into()));
    }
    if samples_per_cell == 0 {
        return Err(Error::Config("samples_per_cell must be at least 1".into()));
    }
    if sys.n() != complex.n() {
        return Err(Error::Dimension(format!("system on R^{} and complex on R^{}", sys.n(), complex.n())));
    }
    let propagators =
        controls.iter().map(|u| Ok(Propagator::new(&drift_matrix(sys, u)?, tau))).collect::<Result<Vec<_>>>()?;
    let per_cell = (0..complex.len())
        .into_par_iter()
        .map(|cell| {
            let samples = sample_cell(complex, cell, samples_per_cell, seed);
            let mut out = Vec::new();
            for prop in &propagators {
                for x in &samples {
                    out.extend(prop.apply(x)?.features());
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(FlowImages {
        tau,
        controls: controls.to_vec(),
        samples_per_cell,
        seed,
        feature_len: complex.signature().feature_len(),
        data: per_cell.concat(),
    })
}

/// Edges from precomputed images: each image connects to the cell it lands
/// in and, for `epsilon > 0`, to every cell whose center is within `epsilon`.
pub fn graph_from_images(complex: &CellComplex, images: &FlowImages, epsilon: f64) -> Result<CellGraph> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::Config(format!("epsilon = {epsilon} must be nonnegative")));
    }
    if images.cells() != complex.len() {
        return Err(Error::Dimension(format!("{} imaged cells for a complex of {}", images.cells(), complex.len())));
    }
    let edges = (0..complex.len())
        .into_par_iter()
        .map(|cell| {
            let mut out = Vec::new();
            let mut ball = Vec::new();
            for control in 0..images.controls.len() {
                for sample in 0..images.samples_per_cell {
                    let f = images.image(cell, control, sample);
                    if epsilon > 0.0 {
                        let target = complex.locate_with_ball(f, epsilon, &mut ball);
                        out.push(Edge { target, control });
                        out.extend(ball.iter().map(|&target| Edge { target, control }));
                    } else {
                        out.push(Edge { target: complex.locate_features(f).0, control });
                    }
                }
            }
            out.sort_unstable();
            out.dedup();
            out
        })
        .collect();
    Ok(CellGraph {
        tau: images.tau,
        epsilon,
        controls: images.controls.clone(),
        samples_per_cell: images.samples_per_cell,
        seed: images.seed,
        edges,
    })
}

pub fn build_graph(
    sys: &BilinearSystem,
    complex: &CellComplex,
    tau: f64,
    epsilon: f64,
    controls: &[Vec<f64>],
    samples_per_cell: usize,
    seed: u64,
) -> Result<CellGraph> {
    let images = flow_images(sys, complex, tau, controls, samples_per_cell, seed)?;
    graph_from_images(complex, &images, epsilon)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetKind {
    Control,
    Chain,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSet {
    pub cells: BTreeSet<usize>,
    pub kind: SetKind,
    pub weyl_labels: BTreeSet<WeylElement>,
    /// Cells holding the core points that produced the labels.
    pub core_cells: BTreeSet<usize>,
}

impl LabeledSet {
    pub fn unlabeled(cells: BTreeSet<usize>, kind: SetKind) -> Self {
        Self { cells, kind, weyl_labels: BTreeSet::new(), core_cells: BTreeSet::new() }
    }

    pub fn is_labeled(&self) -> bool {
        !self.weyl_labels.is_empty()
    }

    pub fn cell_vec(&self) -> Vec<usize> {
        self.cells.iter().copied().collect()
    }
}

/// Strongly connected components with at least one internal edge, ordered
/// by their smallest cell.
fn recurrent_components(graph: &CellGraph) -> Vec<BTreeSet<usize>> {
    let adjacency = graph.union_adjacency();
    let mut g = DiGraph::<(), ()>::with_capacity(graph.len(), graph.edge_count());
    let nodes: Vec<_> = (0..graph.len()).map(|_| g.add_node(())).collect();
    for (c, targets) in adjacency.iter().enumerate() {
        for &t in targets {
            g.add_edge(nodes[c], nodes[t], ());
        }
    }
    let mut comps: Vec<BTreeSet<usize>> = tarjan_scc(&g)
        .into_iter()
        .map(|comp| comp.into_iter().map(|ix| ix.index()).collect::<BTreeSet<usize>>())
        .filter(|comp| comp.len() > 1 || comp.iter().all(|&c| adjacency[c].binary_search(&c).is_ok()))
        .collect();
    comps.sort_by_key(|c| *c.iter().next().expect("components are nonempty"));
    comps
}

/// Components of the ε-inflated graph: outer approximations of the chain
/// control sets.
pub fn chain_control_sets(graph: &CellGraph) -> Result<Vec<LabeledSet>> {
    if graph.epsilon <= 0.0 {
        return Err(Error::Config("chain control sets need epsilon > 0".into()));
    }
    Ok(recurrent_components(graph).into_iter().map(|c| LabeledSet::unlabeled(c, SetKind::Chain)).collect())
}

/// Components of the exact graph: inner approximations of the control sets.
pub fn control_sets(graph: &CellGraph) -> Result<Vec<LabeledSet>> {
    if graph.epsilon != 0.0 {
        return Err(Error::Config(format!("control sets need epsilon = 0, got {}", graph.epsilon)));
    }
    Ok(recurrent_components(graph).into_iter().map(|c| LabeledSet::unlabeled(c, SetKind::Control)).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorePoint {
    pub label: WeylElement,
    pub point: FlagPoint,
    /// Constant control whose fixed point this is.
    pub control: Vec<f64>,
}

/// Fixed flags of `exp(t X_u)` for interior controls `u` with `X_u` split
/// regular, one per coset `w W_Θ`. Non-split drifts are skipped; an empty
/// result means no interior control gave a regular element.
pub fn core_points(sys: &BilinearSystem, theta: &ThetaSet, controls: &[ControlSample]) -> Result<Vec<CorePoint>> {
    let n = sys.n();
    let reps = weyl::coset_representatives(n, theta)?;
    let mut out = Vec::new();
    for sample in controls.iter().filter(|s| s.interior) {
        let x = drift_matrix(sys, &sample.u)?;
        let split = match lie::split_decompose(&x, TOL_ROOT) {
            Ok(d) => d,
            Err(Error::NotSplit(_)) => continue,
            Err(e) => return Err(e),
        };
        if !split.regular {
            continue;
        }
        for comp in lie::fixed_components(&split, theta, &reps)? {
            out.push(CorePoint { label: comp.weyl_label, point: comp.point, control: sample.u.clone() });
        }
    }
    Ok(out)
}

/// Attaches to each set the labels of the core points whose cells it
/// contains and returns the sets that received at least one label.
pub fn label_sets(sets: &[LabeledSet], cores: &[CorePoint], complex: &CellComplex) -> Result<Vec<LabeledSet>> {
    let mut labeled: Vec<LabeledSet> = sets.to_vec();
    for core in cores {
        let cell = complex.locate(&core.point)?;
        let set = labeled.iter_mut().find(|s| s.cells.contains(&cell)).ok_or_else(|| {
            Error::Label(format!(
                "core point of {} (control {:?}) lies in cell {cell}, which is in no set",
                core.label, core.control
            ))
        })?;
        set.weyl_labels.insert(core.label.clone());
        set.core_cells.insert(cell);
    }
    for (k, s) in labeled.iter().enumerate() {
        if let Some(w) = labeled[k + 1..].iter().find_map(|t| t.weyl_labels.intersection(&s.weyl_labels).next()) {
            return Err(Error::Label(format!("label {w} lands in two different sets")));
        }
    }
    Ok(labeled.into_iter().filter(LabeledSet::is_labeled).collect())
}

/// Partition of the labels over the sets, as sorted label lists.
fn label_partition(labeled: &[LabeledSet]) -> BTreeSet<Vec<WeylElement>> {
    labeled.iter().map(|s| s.weyl_labels.iter().cloned().collect()).collect()
}

/// The parabolic type `Θ'` whose double cosets `W_{Θ'} \ W / W_Θ` explain
/// the labeling on `F_Θ`.
///
/// The set carrying `e` must carry exactly the representatives lying in
/// `W_{Θ'} W_Θ`. When several `Θ'` fit, those reproducing the whole
/// observed partition are preferred, then the smallest. On the maximal flag
/// this is the `Θ'` with `W_{Θ'}` equal to the labels sharing the set of `e`.
pub fn semigroup_flag_type(labeled: &[LabeledSet], n: usize, theta: &ThetaSet) -> Result<ThetaSet> {
    theta.validate(n)?;
    let e = WeylElement::identity(n);
    let home = labeled
        .iter()
        .find(|s| s.weyl_labels.contains(&e))
        .ok_or_else(|| Error::Structure("no set carries the identity label".into()))?;
    let reps = weyl::coset_representatives(n, theta)?;
    let observed = label_partition(labeled);

    let mut fitting = Vec::new();
    for cand in ThetaSet::all(n) {
        let blocks = weyl::double_cosets(n, &cand, theta)?;
        let home_reps: BTreeSet<WeylElement> = reps.iter().filter(|w| blocks[0].contains(w)).cloned().collect();
        if home_reps != home.weyl_labels {
            continue;
        }
        let predicted: BTreeSet<Vec<WeylElement>> =
            blocks.iter().map(|b| reps.iter().filter(|w| b.contains(w)).cloned().collect::<Vec<_>>()).collect();
        fitting.push((predicted == observed, cand));
    }
    fitting.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.len().cmp(&b.1.len())).then_with(|| a.1.cmp(&b.1)));
    fitting.into_iter().next().map(|(_, t)| t).ok_or_else(|| {
        let labels: Vec<String> = home.weyl_labels.iter().map(ToString::to_string).collect();
        Error::Structure(format!("labels {{{}}} sharing the set of e match no parabolic subgroup", labels.join(", ")))
    })
}

/// Cells with a directed path into `target`, including the target.
pub fn domain_of_attraction(graph: &CellGraph, target: &LabeledSet) -> BTreeSet<usize> {
    let rev = graph.reversed_adjacency();
    let mut seen: BTreeSet<usize> = target.cells.clone();
    let mut queue: VecDeque<usize> = target.cells.iter().copied().collect();
    while let Some(c) = queue.pop_front() {
        for &p in &rev[c] {
            if seen.insert(p) {
                queue.push_back(p);
            }
        }
    }
    seen
}

/// Indices of the sets with no edge leaving them.
pub fn sink_sets(graph: &CellGraph, sets: &[LabeledSet]) -> Vec<usize> {
    sets.iter()
        .enumerate()
        .filter(|(_, s)| s.cells.iter().all(|&c| graph.edges[c].iter().all(|e| s.cells.contains(&e.target))))
        .map(|(i, _)| i)
        .collect()
}

/// The labeled set carrying `w`, if any.
pub fn set_with_label<'a>(sets: &'a [LabeledSet], w: &WeylElement) -> Option<&'a LabeledSet> {
    sets.iter().find(|s| s.weyl_labels.contains(w))
}

/// Centers of `cells` further than `band` from every center of `other`.
pub fn cells_beyond(complex: &CellComplex, cells: &BTreeSet<usize>, other: &BTreeSet<usize>, band: f64) -> usize {
    let other: Vec<usize> = other.iter().copied().collect();
    cells.iter().filter(|&&c| complex.distance_to_cells(complex.center_features(c), &other) > band).count()
}

/// Hausdorff distance between two sets of cell centers.
pub fn hausdorff(complex: &CellComplex, a: &BTreeSet<usize>, b: &BTreeSet<usize>) -> f64 {
    let one_sided = |x: &BTreeSet<usize>, y: &BTreeSet<usize>| {
        let y: Vec<usize> = y.iter().copied().collect();
        x.iter().map(|&c| complex.distance_to_cells(complex.center_features(c), &y)).fold(0.0, f64::max)
    };
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    one_sided(a, b).max(one_sided(b, a))
}

/// Cellwise comparison of a domain of attraction with its saturation formula
/// and of a chain set with its containment formula.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExhaustionReport {
    pub label: WeylElement,
    /// Reduced word of `w₀w`, applied first letter first.
    pub domain_word: Vec<usize>,
    pub domain_cells: usize,
    pub saturated_cells: usize,
    pub symmetric_difference: usize,
    /// Symmetric-difference cells further than `band` from the other side.
    pub beyond_band: usize,
    /// Reduced word of `w`, applied first letter first.
    pub attraction_word: Vec<usize>,
    pub containment_violations: usize,
    pub violations_beyond_band: usize,
    pub band: f64,
    /// The domain word is empty, so both sides are the set itself.
    pub degenerate: bool,
}

/// Saturates `cells` by `γ_i` for the letters of `word` in order.
pub fn saturate_word(
    cells: &BTreeSet<usize>,
    word: &[usize],
    fibers: &BTreeMap<usize, FiberMap>,
) -> Result<BTreeSet<usize>> {
    let mut cur = cells.clone();
    for &i in word {
        let map = fibers.get(&i).ok_or_else(|| Error::Config(format!("no complex for F_{{{i}}}")))?;
        cur = map.saturate(&cur);
    }
    Ok(cur)
}

/// Compares `A(D(w))` with `γ(D(w₀))` along the reduced word of `w₀w`, and
/// checks `E(w) ⊂ γ(E(e))` along the reduced word of `w`, on the maximal
/// flag. `band` is the dilation under which differences are tolerated.
pub fn check_exhaustion_formulas(
    graph: &CellGraph,
    controls: &[LabeledSet],
    chains: &[LabeledSet],
    complex: &CellComplex,
    fibers: &BTreeMap<usize, FiberMap>,
    w: &WeylElement,
    band: f64,
) -> Result<ExhaustionReport> {
    let n = complex.n();
    if !complex.signature().theta().is_empty() {
        return Err(Error::Config("exhaustion formulas live on the maximal flag".into()));
    }
    let w0 = weyl::longest_element(n)?;
    let missing = |what: &str, v: &WeylElement| Error::Label(format!("no {what} set carries {v}"));
    let d_w = set_with_label(controls, w).ok_or_else(|| missing("control", w))?;
    let d_w0 = set_with_label(controls, &w0).ok_or_else(|| missing("control", &w0))?;
    let e = WeylElement::identity(n);
    let e_w = set_with_label(chains, w).ok_or_else(|| missing("chain", w))?;
    let e_e = set_with_label(chains, &e).ok_or_else(|| missing("chain", &e))?;

    let domain_word = weyl::reduced_word(&w0.compose(w)?);
    let domain = domain_of_attraction(graph, d_w);
    let saturated = saturate_word(&d_w0.cells, &domain_word, fibers)?;
    let only_domain: BTreeSet<usize> = domain.difference(&saturated).copied().collect();
    let only_saturated: BTreeSet<usize> = saturated.difference(&domain).copied().collect();
    let beyond_band =
        cells_beyond(complex, &only_domain, &saturated, band) + cells_beyond(complex, &only_saturated, &domain, band);

    let attraction_word = weyl::reduced_word(w);
    let bound = saturate_word(&e_e.cells, &attraction_word, fibers)?;
    let outside: BTreeSet<usize> = e_w.cells.difference(&bound).copied().collect();

    Ok(ExhaustionReport {
        label: w.clone(),
        degenerate: domain_word.is_empty(),
        domain_word,
        domain_cells: domain.len(),
        saturated_cells: saturated.len(),
        symmetric_difference: only_domain.len() + only_saturated.len(),
        beyond_band,
        attraction_word,
        containment_violations: outside.len(),
        violations_beyond_band: cells_beyond(complex, &outside, &bound, band),
        band,
    })
}

//! Weyl group of `sl(n, R)`: the symmetric group `S_n` acting on the
//! diagonal Cartan subalgebra by permuting coordinates.
//!
//! Elements are kept in one-line notation with 1-based entries, so
//! `[2, 1, 3]` is the simple reflection `s_1`. Composition follows the
//! function convention `(w1 ∘ w2)(i) = w1(w2(i))`, and a word
//! `[i_1, ..., i_k]` denotes the product `s_{i_1} ∘ ... ∘ s_{i_k}`.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A permutation of `{1..n}` in one-line notation.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct WeylElement {
    perm: Vec<usize>,
}

impl WeylElement {
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let n = perm.len();
        let mut seen = vec![false; n + 1];
        for &p in &perm {
            if p == 0 || p > n || seen[p] {
                return Err(Error::InvalidPermutation(format!("{perm:?} is not a bijection of 1..{n}")));
            }
            seen[p] = true;
        }
        Ok(Self { perm })
    }

    pub fn identity(n: usize) -> Self {
        Self { perm: (1..=n).collect() }
    }

    /// The transposition `(i, i+1)`.
    pub fn simple_reflection(n: usize, i: usize) -> Result<Self> {
        if i == 0 || i >= n {
            return Err(Error::InvalidTheta(format!("simple reflection index {i} outside 1..{}", n.saturating_sub(1))));
        }
        let mut perm: Vec<usize> = (1..=n).collect();
        perm.swap(i - 1, i);
        Ok(Self { perm })
    }

    pub fn n(&self) -> usize {
        self.perm.len()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.perm
    }

    /// Image of the 1-based index `i`.
    pub fn apply(&self, i: usize) -> usize {
        self.perm[i - 1]
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(k, &p)| p == k + 1)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.n()];
        for (k, &p) in self.perm.iter().enumerate() {
            inv[p - 1] = k + 1;
        }
        Self { perm: inv }
    }

    /// Coxeter length, equal to the number of inversions.
    pub fn length(&self) -> usize {
        let p = &self.perm;
        (0..p.len()).flat_map(|i| (i + 1..p.len()).map(move |j| (i, j))).filter(|&(i, j)| p[i] > p[j]).count()
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        compose(self, other)
    }

    /// Right multiplication by `s_i` without size checks; `i` must be valid.
    fn times_simple(&self, i: usize) -> Self {
        let mut perm = self.perm.clone();
        perm.swap(i - 1, i);
        Self { perm }
    }

    /// Image of the root `e_i - e_j` under this element.
    pub fn act_on_root(&self, root: (usize, usize)) -> (usize, usize) {
        (self.apply(root.0), self.apply(root.1))
    }
}

impl TryFrom<Vec<usize>> for WeylElement {
    type Error = Error;
    fn try_from(perm: Vec<usize>) -> Result<Self> {
        Self::new(perm)
    }
}

impl From<WeylElement> for Vec<usize> {
    fn from(w: WeylElement) -> Self {
        w.perm
    }
}

impl fmt::Debug for WeylElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.perm)
    }
}

impl fmt::Display for WeylElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.perm.iter().map(|p| p.to_string()).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

impl FromStr for WeylElement {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let trimmed = s.trim().trim_start_matches('[').trim_end_matches(']');
        let perm = trimmed
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<usize>().map_err(|_| Error::InvalidPermutation(format!("cannot parse {s:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(perm)
    }
}

/// A subset of the simple-root indices `{1..n-1}`, where index `i` stands
/// for `α_i = e_i - e_{i+1}`.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ThetaSet {
    indices: BTreeSet<usize>,
}

impl ThetaSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// All simple roots.
    pub fn full(n: usize) -> Self {
        Self { indices: (1..n).collect() }
    }

    pub fn new(n: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let theta = Self { indices: indices.into_iter().collect() };
        theta.validate(n)?;
        Ok(theta)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match self.indices.iter().find(|&&i| i == 0 || i >= n) {
            Some(i) => Err(Error::InvalidTheta(format!("index {i} outside 1..{}", n.saturating_sub(1)))),
            None => Ok(()),
        }
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.contains(&i)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.indices.is_subset(&other.indices)
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.indices.iter().copied().collect()
    }

    /// The partition of `{1..n}` into consecutive blocks, where `i` and
    /// `i+1` share a block iff `i ∈ Θ`.
    pub fn blocks(&self, n: usize) -> Vec<Vec<usize>> {
        let mut blocks = vec![vec![1]];
        for i in 1..n {
            if self.contains(i) {
                blocks.last_mut().unwrap().push(i + 1);
            } else {
                blocks.push(vec![i + 1]);
            }
        }
        blocks
    }

    /// Every subset of `{1..n-1}`, ordered by size and then lexicographically.
    pub fn all(n: usize) -> Vec<Self> {
        let r = n.saturating_sub(1);
        let mut all: Vec<Self> = (0u32..(1 << r))
            .map(|mask| Self { indices: (1..=r).filter(|i| mask & (1 << (i - 1)) != 0).collect() })
            .collect();
        all.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.to_vec().cmp(&b.to_vec())));
        all
    }
}

impl fmt::Debug for ThetaSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for ThetaSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.indices.iter().map(|i| i.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

impl FromStr for ThetaSet {
    type Err = Error;
    /// Parses `"1,2"`, `"{1,2}"` or the empty string. Range checks need `n`
    /// and are left to [`ThetaSet::validate`].
    fn from_str(s: &str) -> Result<Self> {
        let trimmed = s.trim().trim_start_matches('{').trim_end_matches('}');
        let indices = trimmed
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<usize>().map_err(|_| Error::InvalidTheta(format!("cannot parse {s:?}"))))
            .collect::<Result<BTreeSet<_>>>()?;
        Ok(Self { indices })
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidDimension(n));
    }
    Ok(())
}

pub fn compose(w1: &WeylElement, w2: &WeylElement) -> Result<WeylElement> {
    if w1.n() != w2.n() {
        return Err(Error::Dimension(format!("cannot compose elements of S_{} and S_{}", w1.n(), w2.n())));
    }
    Ok(WeylElement { perm: w2.perm.iter().map(|&i| w1.perm[i - 1]).collect() })
}

/// The order-reversing permutation `w₀ = [n, ..., 1]`, the unique element
/// mapping the positive roots onto the negative ones.
pub fn longest_element(n: usize) -> Result<WeylElement> {
    check_n(n)?;
    Ok(WeylElement { perm: (1..=n).rev().collect() })
}

/// All `n!` elements in lexicographic order.
pub fn all_elements(n: usize) -> Vec<WeylElement> {
    fn extend(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<WeylElement>) {
        let n = used.len();
        if prefix.len() == n {
            out.push(WeylElement { perm: prefix.clone() });
            return;
        }
        for v in 1..=n {
            if !used[v - 1] {
                used[v - 1] = true;
                prefix.push(v);
                extend(prefix, used, out);
                prefix.pop();
                used[v - 1] = false;
            }
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

/// The parabolic subgroup `W_Θ` generated by `{s_i : i ∈ Θ}`.
pub fn subgroup(n: usize, theta: &ThetaSet) -> Result<BTreeSet<WeylElement>> {
    check_n(n)?;
    theta.validate(n)?;
    let mut group = BTreeSet::from([WeylElement::identity(n)]);
    let mut frontier = vec![WeylElement::identity(n)];
    while let Some(w) = frontier.pop() {
        for i in theta.iter() {
            let next = w.times_simple(i);
            if group.insert(next.clone()) {
                frontier.push(next);
            }
        }
    }
    Ok(group)
}

/// One block `W_L · w · W_R` of a double-coset partition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoubleCoset {
    /// Minimal-length element of the block (ties broken lexicographically).
    pub representative: WeylElement,
    pub elements: Vec<WeylElement>,
}

impl DoubleCoset {
    pub fn contains(&self, w: &WeylElement) -> bool {
        self.elements.binary_search(w).is_ok()
    }
}

/// Partition of `W` into the double cosets `W_left \ W / W_right`, sorted by
/// representative length and then lexicographically, so the block of the
/// identity comes first.
pub fn double_cosets(n: usize, left: &ThetaSet, right: &ThetaSet) -> Result<Vec<DoubleCoset>> {
    let wl = subgroup(n, left)?;
    let wr = subgroup(n, right)?;
    let mut assigned: BTreeSet<WeylElement> = BTreeSet::new();
    let mut blocks = Vec::new();
    for w in all_elements(n) {
        if assigned.contains(&w) {
            continue;
        }
        let mut block = BTreeSet::new();
        for a in &wl {
            let aw = compose(a, &w)?;
            for b in &wr {
                block.insert(compose(&aw, b)?);
            }
        }
        let representative = block
            .iter()
            .min_by(|x, y| x.length().cmp(&y.length()).then_with(|| x.cmp(y)))
            .cloned()
            .expect("double coset is nonempty");
        assigned.extend(block.iter().cloned());
        blocks.push(DoubleCoset { representative, elements: block.into_iter().collect() });
    }
    blocks.sort_by(|a, b| {
        a.representative.length().cmp(&b.representative.length()).then_with(|| a.representative.cmp(&b.representative))
    });
    Ok(blocks)
}

/// Minimal-length representatives of the cosets `W / W_Θ`.
pub fn coset_representatives(n: usize, theta: &ThetaSet) -> Result<Vec<WeylElement>> {
    Ok(double_cosets(n, &ThetaSet::empty(), theta)?.into_iter().map(|b| b.representative).collect())
}

/// Index of the block containing `w`.
pub fn block_of(blocks: &[DoubleCoset], w: &WeylElement) -> Option<usize> {
    blocks.iter().position(|b| b.contains(w))
}

/// A reduced word `[i_1, ..., i_k]` with `w = s_{i_1} ∘ ... ∘ s_{i_k}` and
/// `k = length(w)`, obtained by peeling off right descents.
pub fn reduced_word(w: &WeylElement) -> Vec<usize> {
    let mut word = Vec::with_capacity(w.length());
    let mut cur = w.clone();
    while let Some(i) = (1..cur.n()).find(|&i| cur.apply(i) > cur.apply(i + 1)) {
        word.push(i);
        cur = cur.times_simple(i);
    }
    word.reverse();
    word
}

pub fn word_product(n: usize, word: &[usize]) -> Result<WeylElement> {
    check_n(n)?;
    let mut w = WeylElement::identity(n);
    for &i in word {
        if i == 0 || i >= n {
            return Err(Error::InvalidTheta(format!("generator index {i} outside 1..{}", n - 1)));
        }
        w = w.times_simple(i);
    }
    Ok(w)
}

/// Shortest words for every element, by breadth-first search over the
/// Cayley graph. Exhaustive, so only sensible for small `n`.
pub fn cayley_words(n: usize) -> Result<HashMap<WeylElement, Vec<usize>>> {
    check_n(n)?;
    let mut words = HashMap::from([(WeylElement::identity(n), Vec::new())]);
    let mut queue = VecDeque::from([WeylElement::identity(n)]);
    while let Some(w) = queue.pop_front() {
        let word = words[&w].clone();
        for i in 1..n {
            let next = w.times_simple(i);
            if !words.contains_key(&next) {
                let mut nw = word.clone();
                nw.push(i);
                words.insert(next.clone(), nw);
                queue.push_back(next);
            }
        }
    }
    Ok(words)
}

/// The root set `⟨Θ⟩`: all `e_i - e_j` (`i ≠ j`) with `i`, `j` in the same
/// block of the partition induced by `Θ`.
pub fn root_closure(n: usize, theta: &ThetaSet) -> BTreeSet<(usize, usize)> {
    let mut roots = BTreeSet::new();
    for block in theta.blocks(n) {
        for &i in &block {
            for &j in &block {
                if i != j {
                    roots.insert((i, j));
                }
            }
        }
    }
    roots
}

/// Whether `⟨Θ(φ)⟩ ⊂ w⟨Θ⟩`, the condition under which the chain control
/// set labeled by `w` on `F_Θ` is hyperbolic.
pub fn is_hyperbolic_label(n: usize, theta_phi: &ThetaSet, w: &WeylElement, theta: &ThetaSet) -> Result<bool> {
    check_n(n)?;
    theta_phi.validate(n)?;
    theta.validate(n)?;
    if w.n() != n {
        return Err(Error::Dimension(format!("element of S_{} used with n = {n}", w.n())));
    }
    let image: BTreeSet<(usize, usize)> = root_closure(n, theta).into_iter().map(|r| w.act_on_root(r)).collect();
    Ok(root_closure(n, theta_phi).is_subset(&image))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(p: &[usize]) -> WeylElement {
        WeylElement::new(p.to_vec()).unwrap()
    }

    fn theta(n: usize, idx: &[usize]) -> ThetaSet {
        ThetaSet::new(n, idx.iter().copied()).unwrap()
    }

    #[test]
    fn rejects_non_permutations() {
        assert!(WeylElement::new(vec![1, 1, 3]).is_err());
        assert!(WeylElement::new(vec![0, 1]).is_err());
        assert!(WeylElement::new(vec![1, 4, 2]).is_err());
        assert!("[2, 1, 3]".parse::<WeylElement>().is_ok());
    }

    #[test]
    fn compose_identity_and_involution() {
        let s1 = WeylElement::simple_reflection(3, 1).unwrap();
        let e = WeylElement::identity(3);
        assert_eq!(compose(&e, &s1).unwrap(), s1);
        assert_eq!(compose(&s1, &s1).unwrap(), e);
    }

    #[test]
    fn compose_matches_pointwise_arithmetic() {
        // Independent oracle: (w1 ∘ w2)(i) = w1(w2(i)) on explicit lookup tables.
        let s1 = [2usize, 1, 3];
        let s2 = [1usize, 3, 2];
        let expected: Vec<usize> = (0..3).map(|i| s1[s2[i] - 1]).collect();
        assert_eq!(expected, vec![2, 3, 1]);
        assert_eq!(compose(&w(&s1), &w(&s2)).unwrap(), w(&expected));
        // a 3-cycle: order 3
        let c = w(&expected);
        let c3 = compose(&c, &compose(&c, &c).unwrap()).unwrap();
        assert!(c3.is_identity());
    }

    #[test]
    fn compose_size_mismatch() {
        assert!(matches!(compose(&WeylElement::identity(2), &WeylElement::identity(3)), Err(Error::Dimension(_))));
    }

    #[test]
    fn longest_element_small_cases() {
        assert!(matches!(longest_element(1), Err(Error::InvalidDimension(1))));
        let w0 = longest_element(2).unwrap();
        assert_eq!(w0, w(&[2, 1]));
        // the single positive root e1 - e2 goes to e2 - e1
        assert_eq!(w0.act_on_root((1, 2)), (2, 1));
        let w0 = longest_element(3).unwrap();
        assert_eq!(w0, w(&[3, 2, 1]));
        let max_len = all_elements(3).iter().map(|x| x.length()).max().unwrap();
        assert_eq!(max_len, 3);
        assert_eq!(w0.length(), 3);
        for n in 2..=4 {
            let w0 = longest_element(n).unwrap();
            assert!(compose(&w0, &w0).unwrap().is_identity());
        }
    }

    #[test]
    fn subgroup_examples() {
        assert_eq!(subgroup(3, &ThetaSet::empty()).unwrap().len(), 1);
        assert_eq!(subgroup(4, &ThetaSet::full(4)).unwrap().len(), 24);
        let g = subgroup(3, &theta(3, &[1])).unwrap();
        assert_eq!(g, BTreeSet::from([WeylElement::identity(3), w(&[2, 1, 3])]));
        assert!(matches!(subgroup(3, &ThetaSet::from_str("3").unwrap()), Err(Error::InvalidTheta(_))));
    }

    #[test]
    fn double_coset_extremes() {
        let singles = double_cosets(3, &ThetaSet::empty(), &ThetaSet::empty()).unwrap();
        assert_eq!(singles.len(), 6);
        let one = double_cosets(3, &ThetaSet::full(3), &theta(3, &[1])).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].elements.len(), 6);
    }

    #[test]
    fn double_cosets_s1_s1_in_s3() {
        // Oracle: orbit closure of each element under left and right
        // multiplication by {e, s1}, computed directly on lookup tables.
        let s1 = [2usize, 1, 3];
        let e = [1usize, 2, 3];
        let mul = |a: &[usize], b: &[usize]| -> Vec<usize> { (0..3).map(|i| a[b[i] - 1]).collect() };
        let elements = all_elements(3);
        let mut seen: Vec<Vec<usize>> = Vec::new();
        let mut count = 0;
        for x in &elements {
            let x = x.as_slice().to_vec();
            if seen.contains(&x) {
                continue;
            }
            count += 1;
            for l in [&e[..], &s1[..]] {
                for r in [&e[..], &s1[..]] {
                    let y = mul(&mul(l, &x), r);
                    if !seen.contains(&y) {
                        seen.push(y);
                    }
                }
            }
        }
        assert_eq!(count, 2);
        let blocks = double_cosets(3, &theta(3, &[1]), &theta(3, &[1])).unwrap();
        assert_eq!(blocks.len(), count);
        assert!(blocks[0].representative.is_identity());
    }

    #[test]
    fn reduced_words() {
        assert!(reduced_word(&WeylElement::identity(3)).is_empty());
        assert_eq!(reduced_word(&WeylElement::simple_reflection(3, 1).unwrap()), vec![1]);
        let w0 = longest_element(3).unwrap();
        let word = reduced_word(&w0);
        assert_eq!(word.len(), 3);
        assert_eq!(word_product(3, &word).unwrap(), w0);
        let bfs = cayley_words(3).unwrap();
        assert_eq!(bfs[&w0].len(), 3);
    }

    #[test]
    fn hyperbolicity_examples() {
        let n = 3;
        for x in all_elements(n) {
            for t in ThetaSet::all(n) {
                assert!(is_hyperbolic_label(n, &ThetaSet::empty(), &x, &t).unwrap());
                assert!(!is_hyperbolic_label(n, &theta(n, &[1]), &x, &ThetaSet::empty()).unwrap());
            }
        }
        let e = WeylElement::identity(n);
        assert!(is_hyperbolic_label(n, &theta(n, &[1]), &e, &theta(n, &[1, 2])).unwrap());
        assert!(is_hyperbolic_label(n, &theta(n, &[2]), &e, &theta(n, &[2])).unwrap());
        // s2 moves the root e1 - e2 to e1 - e3, which is not in ⟨{1}⟩
        let s2 = WeylElement::simple_reflection(n, 2).unwrap();
        assert!(!is_hyperbolic_label(n, &theta(n, &[1]), &s2, &theta(n, &[1])).unwrap());
    }

    #[test]
    fn theta_parsing_and_blocks() {
        let t: ThetaSet = "{1, 3}".parse().unwrap();
        assert_eq!(t.to_vec(), vec![1, 3]);
        assert_eq!(t.blocks(4), vec![vec![1, 2], vec![3, 4]]);
        assert_eq!(ThetaSet::empty().blocks(3), vec![vec![1], vec![2], vec![3]]);
        assert_eq!(ThetaSet::all(3).len(), 4);
        assert!(t.validate(3).is_err());
    }
}

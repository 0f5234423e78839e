//! The Weyl group routines against brute-force permutation arithmetic that
//! shares no code with the library.

use std::collections::{BTreeMap, BTreeSet};

use flagcs::weyl::{self, ThetaSet, WeylElement};
use proptest::prelude::*;

type Perm = Vec<usize>;

fn permutations(n: usize) -> Vec<Perm> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n);
            out.push(q);
        }
    }
    out
}

fn mul(a: &Perm, b: &Perm) -> Perm {
    b.iter().map(|&i| a[i - 1]).collect()
}

fn reflection(n: usize, i: usize) -> Perm {
    let mut p: Perm = (1..=n).collect();
    p.swap(i - 1, i);
    p
}

fn inversions(p: &Perm) -> usize {
    (0..p.len()).flat_map(|i| (i + 1..p.len()).map(move |j| (i, j))).filter(|&(i, j)| p[i] > p[j]).count()
}

/// Double cosets by closing each element under left and right
/// multiplication by the generators.
fn oracle_double_cosets(n: usize, left: &[usize], right: &[usize]) -> BTreeSet<BTreeSet<Perm>> {
    let mut block_of: BTreeMap<Perm, usize> = BTreeMap::new();
    let mut blocks = Vec::new();
    for p in permutations(n) {
        if block_of.contains_key(&p) {
            continue;
        }
        let id = blocks.len();
        let mut block = BTreeSet::from([p.clone()]);
        let mut stack = vec![p];
        while let Some(q) = stack.pop() {
            block_of.insert(q.clone(), id);
            let moves = left
                .iter()
                .map(|&i| mul(&reflection(n, i), &q))
                .chain(right.iter().map(|&i| mul(&q, &reflection(n, i))));
            for r in moves.collect::<Vec<_>>() {
                if block.insert(r.clone()) {
                    stack.push(r);
                }
            }
        }
        blocks.push(block);
    }
    blocks.into_iter().collect()
}

fn subsets(n: usize) -> Vec<Vec<usize>> {
    (0u32..1 << (n - 1)).map(|m| (1..n).filter(|i| m & (1 << (i - 1)) != 0).collect()).collect()
}

#[test]
fn group_order_and_longest_element() {
    for n in 2..=4 {
        let all = weyl::all_elements(n);
        assert_eq!(all.len(), (1..=n).product::<usize>());
        let as_perms: BTreeSet<Perm> = all.iter().map(|w| w.as_slice().to_vec()).collect();
        assert_eq!(as_perms, permutations(n).into_iter().collect());
        let w0 = weyl::longest_element(n).unwrap();
        assert!(w0.compose(&w0).unwrap().is_identity());
        assert_eq!(w0.length(), n * (n - 1) / 2);
        assert_eq!(all.iter().map(WeylElement::length).max(), Some(w0.length()));
    }
}

#[test]
fn double_cosets_match_oracle_for_all_parabolic_pairs() {
    for n in 2..=4 {
        for l in subsets(n) {
            for r in subsets(n) {
                let left = ThetaSet::new(n, l.iter().copied()).unwrap();
                let right = ThetaSet::new(n, r.iter().copied()).unwrap();
                let blocks = weyl::double_cosets(n, &left, &right).unwrap();
                let ours: BTreeSet<BTreeSet<Perm>> =
                    blocks.iter().map(|b| b.elements.iter().map(|w| w.as_slice().to_vec()).collect()).collect();
                assert_eq!(ours, oracle_double_cosets(n, &l, &r), "n = {n}, L = {l:?}, R = {r:?}");
                let total: usize = blocks.iter().map(|b| b.elements.len()).sum();
                assert_eq!(total, (1..=n).product::<usize>());
                assert!(blocks[0].contains(&WeylElement::identity(n)));
                for b in &blocks {
                    let min_len = b.elements.iter().map(WeylElement::length).min().unwrap();
                    assert_eq!(b.representative.length(), min_len);
                }
            }
        }
        let e = ThetaSet::empty();
        assert_eq!(weyl::double_cosets(n, &e, &e).unwrap().len(), (1..=n).product::<usize>());
    }
}

#[test]
fn reduced_words_have_inversion_length() {
    for n in 2..=4 {
        let bfs = weyl::cayley_words(n).unwrap();
        for p in permutations(n) {
            let w = WeylElement::new(p.clone()).unwrap();
            let word = weyl::reduced_word(&w);
            assert_eq!(word.len(), inversions(&p));
            assert_eq!(word.len(), bfs[&w].len());
            let product = word.iter().fold((1..=n).collect::<Perm>(), |acc, &i| mul(&acc, &reflection(n, i)));
            assert_eq!(product, p);
        }
    }
}

#[test]
fn root_closure_and_hyperbolic_labels() {
    let n = 3;
    assert!(weyl::root_closure(n, &ThetaSet::empty()).is_empty());
    assert_eq!(weyl::root_closure(n, &ThetaSet::full(n)).len(), 6);
    // Θ(φ) = ∅ makes every label hyperbolic.
    for w in weyl::all_elements(n) {
        assert!(weyl::is_hyperbolic_label(n, &ThetaSet::empty(), &w, &ThetaSet::new(n, [1]).unwrap()).unwrap());
    }
    let t1 = ThetaSet::new(n, [1]).unwrap();
    let e = WeylElement::identity(n);
    assert!(weyl::is_hyperbolic_label(n, &t1, &e, &t1).unwrap());
    assert!(!weyl::is_hyperbolic_label(n, &t1, &e, &ThetaSet::new(n, [2]).unwrap()).unwrap());
}

fn perm_strategy(n: usize) -> impl Strategy<Value = Perm> {
    Just((1..=n).collect::<Perm>()).prop_shuffle()
}

proptest! {
    #[test]
    fn composition_matches_oracle(a in perm_strategy(4), b in perm_strategy(4)) {
        let (wa, wb) = (WeylElement::new(a.clone()).unwrap(), WeylElement::new(b.clone()).unwrap());
        let c = wa.compose(&wb).unwrap();
        prop_assert_eq!(c.as_slice().to_vec(), mul(&a, &b));
        prop_assert!(wa.compose(&wa.inverse()).unwrap().is_identity());
        prop_assert_eq!(wa.length(), inversions(&a));
        prop_assert!(c.length() <= wa.length() + wb.length());
    }

    #[test]
    fn display_round_trips(a in perm_strategy(5)) {
        let w = WeylElement::new(a).unwrap();
        prop_assert_eq!(w.to_string().parse::<WeylElement>().unwrap(), w);
    }
}

//! Checks comparing computed sets with the structure predicted from the Weyl
//! group. Each takes plain inputs so it can be exercised on fabricated sets.

use std::collections::{BTreeMap, BTreeSet};

use super::report::{CheckResult, Status};
use crate::error::Result;
use crate::flag::{CellComplex, FiberMap};
use crate::setfinder::{self, CellGraph, LabeledSet};
use crate::weyl::{self, ThetaSet, WeylElement};

pub const ACCESSIBILITY: &str = "accessibility";
pub const CONTAINMENT: &str = "containment";
pub const COUNTS: &str = "counts";
pub const CLOSURE: &str = "closure";
pub const MONOTONICITY: &str = "monotonicity";
pub const CONDENSATION: &str = "condensation";
pub const CORE_INTERSECTION: &str = "core_intersection";
pub const EXHAUSTION: &str = "exhaustion";

pub const REGISTERED: [&str; 8] =
    [ACCESSIBILITY, CONTAINMENT, COUNTS, CLOSURE, MONOTONICITY, CONDENSATION, CORE_INTERSECTION, EXHAUSTION];

fn labels_of(s: &LabeledSet) -> Vec<String> {
    s.weyl_labels.iter().map(ToString::to_string).collect()
}

/// Every chain set contains at least one whole control set.
pub fn check_containment(controls: &[LabeledSet], chains: &[LabeledSet]) -> CheckResult {
    let contained: Vec<usize> =
        chains.iter().map(|ch| controls.iter().filter(|c| c.cells.is_subset(&ch.cells)).count()).collect();
    let violations = contained.iter().filter(|&&k| k == 0).count();
    CheckResult::from_bool(
        CONTAINMENT,
        violations == 0 && !chains.is_empty(),
        format!("{} chain sets, {violations} without a whole control set", chains.len()),
    )
    .measure("control_sets_per_chain", &contained)
    .measure("violations", violations)
    .tolerance("violations", 0.0)
}

/// Counts against `|W_{Θ(S)} \ W / W_Θ|` and `|W_{Θ(φ)} \ W / W_Θ|`.
pub fn check_counts(
    n: usize,
    theta: &ThetaSet,
    theta_s: Option<&ThetaSet>,
    theta_phi: Option<&ThetaSet>,
    controls: &[LabeledSet],
    chains: &[LabeledSet],
) -> Result<CheckResult> {
    let (Some(ts), Some(tp)) = (theta_s, theta_phi) else {
        return Ok(CheckResult::skip(COUNTS, "flag type inference failed"));
    };
    let expected_controls = weyl::double_cosets(n, ts, theta)?.len();
    let expected_chains = weyl::double_cosets(n, tp, theta)?.len();
    let pass = controls.len() == expected_controls && chains.len() == expected_chains;
    Ok(CheckResult::from_bool(
        COUNTS,
        pass,
        format!(
            "{} control sets (expected {expected_controls} for Θ(S) = {ts}), {} chain sets (expected {expected_chains} for Θ(φ) = {tp})",
            controls.len(),
            chains.len()
        ),
    )
    .measure("control_sets", controls.len())
    .measure("chain_sets", chains.len())
    .measure("expected_control_sets", expected_controls)
    .measure("expected_chain_sets", expected_chains)
    .measure("theta_s", ts)
    .measure("theta_phi", tp))
}

/// With equal flag types, matched sets must be within Hausdorff distance
/// `2·radius + ε`; otherwise some chain set must exceed that dilation of
/// every control set it contains.
pub fn check_closure(
    controls: &[LabeledSet],
    chains: &[LabeledSet],
    complex: &CellComplex,
    epsilon: f64,
    theta_s: Option<&ThetaSet>,
    theta_phi: Option<&ThetaSet>,
) -> CheckResult {
    let (Some(ts), Some(tp)) = (theta_s, theta_phi) else {
        return CheckResult::skip(CLOSURE, "flag type inference failed");
    };
    let tol = 2.0 * complex.radius() + epsilon;
    if ts == tp {
        let mut gaps = Vec::new();
        for c in controls {
            let Some(ch) = chains.iter().find(|ch| ch.weyl_labels == c.weyl_labels) else {
                return CheckResult::skip(CLOSURE, format!("no chain set with labels {:?}", labels_of(c)));
            };
            gaps.push(setfinder::hausdorff(complex, &c.cells, &ch.cells));
        }
        let worst = gaps.iter().copied().fold(0.0, f64::max);
        CheckResult::from_bool(
            CLOSURE,
            !gaps.is_empty() && worst <= tol,
            format!("{} matched pairs, largest Hausdorff gap {worst:.4}", gaps.len()),
        )
        .measure("hausdorff", &gaps)
        .measure("mode", "equal_flag_types")
        .tolerance("hausdorff", tol)
    } else {
        let exceeding: Vec<bool> = chains
            .iter()
            .map(|ch| {
                controls.iter().filter(|c| c.cells.is_subset(&ch.cells)).all(|c| {
                    let inner: Vec<usize> = c.cells.iter().copied().collect();
                    ch.cells.iter().any(|&x| complex.distance_to_cells(complex.center_features(x), &inner) > tol)
                })
            })
            .collect();
        CheckResult::from_bool(
            CLOSURE,
            exceeding.iter().any(|&e| e),
            format!(
                "Θ(S) = {ts} differs from Θ(φ) = {tp}; {} chain sets exceed their control sets",
                exceeding.iter().filter(|&&e| e).count()
            ),
        )
        .measure("exceeding", &exceeding)
        .measure("mode", "distinct_flag_types")
        .tolerance("dilation", tol)
    }
}

/// Chain sets at ε are each inside some chain set at the larger ε.
pub fn check_monotonicity(small: &[LabeledSet], large: &[LabeledSet], eps_small: f64, eps_large: f64) -> CheckResult {
    let violations = small.iter().filter(|s| !large.iter().any(|l| s.cells.is_subset(&l.cells))).count();
    CheckResult::from_bool(
        MONOTONICITY,
        violations == 0,
        format!("{} sets at ε = {eps_small:.4} against {} at ε = {eps_large:.4}", small.len(), large.len()),
    )
    .measure("violations", violations)
    .measure("sets_small", small.len())
    .measure("sets_large", large.len())
    .tolerance("violations", 0.0)
}

/// A unique labeled sink carrying `e` forward and the coset of `w₀`
/// backward. On `F_Θ` labels are minimal coset representatives, so `w₀`
/// appears as the representative of `w₀ W_Θ`.
pub fn check_condensation(
    n: usize,
    theta: &ThetaSet,
    forward: &CellGraph,
    controls: &[LabeledSet],
    backward: &CellGraph,
    backward_controls: &[LabeledSet],
) -> Result<CheckResult> {
    let e = WeylElement::identity(n);
    let w0 = weyl::longest_element(n)?;
    let blocks = weyl::double_cosets(n, &ThetaSet::empty(), theta)?;
    let w0_rep = blocks[weyl::block_of(&blocks, &w0).expect("partition covers W")].representative.clone();
    let fs = setfinder::sink_sets(forward, controls);
    let bs = setfinder::sink_sets(backward, backward_controls);
    let f_ok = fs.len() == 1 && controls[fs[0]].weyl_labels.contains(&e);
    let b_ok = bs.len() == 1 && backward_controls[bs[0]].weyl_labels.contains(&w0_rep);
    let names = |sets: &[LabeledSet], idx: &[usize]| idx.iter().map(|&i| labels_of(&sets[i])).collect::<Vec<_>>();
    Ok(CheckResult::from_bool(
        CONDENSATION,
        f_ok && b_ok,
        format!("forward sinks {:?}, backward sinks {:?}", names(controls, &fs), names(backward_controls, &bs)),
    )
    .measure("forward_sinks", fs.len())
    .measure("backward_sinks", bs.len())
    .measure("backward_label", w0_rep.to_string()))
}

/// `A(D(w)) ∩ A*(D*(w))` against `D(w)`: the cores must lie in the
/// intersection, and differences must stay within `band` of the other side.
pub fn check_core_intersection(
    complex: &CellComplex,
    forward: &CellGraph,
    controls: &[LabeledSet],
    backward: &CellGraph,
    backward_controls: &[LabeledSet],
    band: f64,
) -> CheckResult {
    let mut rows = Vec::new();
    let mut pass = !controls.is_empty();
    for d in controls {
        let Some(w) = d.weyl_labels.iter().next() else {
            continue;
        };
        let Some(d_star) = setfinder::set_with_label(backward_controls, w) else {
            return CheckResult::skip(CORE_INTERSECTION, format!("no backward set carries {w}"));
        };
        let meet: BTreeSet<usize> = setfinder::domain_of_attraction(forward, d)
            .intersection(&setfinder::domain_of_attraction(backward, d_star))
            .copied()
            .collect();
        let cores_inside = d.core_cells.is_subset(&meet);
        let only_meet: BTreeSet<usize> = meet.difference(&d.cells).copied().collect();
        let only_d: BTreeSet<usize> = d.cells.difference(&meet).copied().collect();
        let beyond = setfinder::cells_beyond(complex, &only_meet, &d.cells, band)
            + setfinder::cells_beyond(complex, &only_d, &meet, band);
        pass &= cores_inside && beyond == 0;
        rows.push(serde_json::json!({
            "label": w.to_string(),
            "cores_inside": cores_inside,
            "symmetric_difference": only_meet.len() + only_d.len(),
            "beyond_band": beyond,
        }));
    }
    CheckResult::from_bool(CORE_INTERSECTION, pass, format!("{} control sets compared", rows.len()))
        .measure("sets", rows)
        .tolerance("band", band)
        .tolerance("beyond_band", 0.0)
}

/// Exhaustion formulas on the maximal flag for every label. The domain
/// formula for `w₀` has an empty saturation word and is reported, not
/// asserted; the attraction containment is asserted for every label.
pub fn check_exhaustion(
    forward: &CellGraph,
    controls: &[LabeledSet],
    chains: &[LabeledSet],
    complex: &CellComplex,
    fibers: &BTreeMap<usize, FiberMap>,
    band: f64,
) -> Result<CheckResult> {
    let mut reports = Vec::new();
    let mut pass = true;
    let mut asserted = 0;
    for d in controls {
        for w in &d.weyl_labels {
            let r = setfinder::check_exhaustion_formulas(forward, controls, chains, complex, fibers, w, band)?;
            pass &= r.violations_beyond_band == 0;
            if !r.degenerate {
                asserted += 1;
                pass &= r.beyond_band == 0;
            }
            reports.push(r);
        }
    }
    Ok(CheckResult::new(
        EXHAUSTION,
        if asserted == 0 {
            Status::Skip
        } else if pass {
            Status::Pass
        } else {
            Status::Fail
        },
        format!("{asserted} labels asserted, {} degenerate", reports.len() - asserted),
    )
    .measure("reports", reports)
    .tolerance("band", band)
    .tolerance("beyond_band", 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flag::{discretize, FlagSignature};
    use crate::setfinder::SetKind;

    fn labeled(cells: &[usize], labels: &[&[usize]], kind: SetKind) -> LabeledSet {
        LabeledSet {
            cells: cells.iter().copied().collect(),
            kind,
            weyl_labels: labels.iter().map(|p| WeylElement::new(p.to_vec()).unwrap()).collect(),
            core_cells: cells.iter().take(1).copied().collect(),
        }
    }

    #[test]
    fn containment_detects_chain_without_control_set() {
        let controls = vec![labeled(&[1, 2], &[&[1, 2]], SetKind::Control)];
        let good = vec![labeled(&[0, 1, 2, 3], &[&[1, 2]], SetKind::Chain)];
        assert!(check_containment(&controls, &good).passed());
        let bad = vec![good[0].clone(), labeled(&[10, 11], &[&[2, 1]], SetKind::Chain)];
        let r = check_containment(&controls, &bad);
        assert_eq!(r.status, Status::Fail);
        assert_eq!(r.measured["violations"], 1);
    }

    #[test]
    fn counts_follow_double_cosets() {
        let two = vec![labeled(&[0], &[&[1, 2]], SetKind::Control), labeled(&[5], &[&[2, 1]], SetKind::Control)];
        let e = ThetaSet::empty();
        assert!(check_counts(2, &e, Some(&e), Some(&e), &two, &two).unwrap().passed());
        let full = ThetaSet::full(2);
        assert_eq!(check_counts(2, &e, Some(&full), Some(&e), &two, &two).unwrap().status, Status::Fail);
        assert_eq!(check_counts(2, &e, None, Some(&e), &two, &two).unwrap().status, Status::Skip);
    }

    #[test]
    fn closure_flags_padded_chain_set() {
        let complex = discretize(&FlagSignature::maximal(2).unwrap(), 90, 0).unwrap();
        let e = ThetaSet::empty();
        let controls = vec![labeled(&[0, 1, 89], &[&[1, 2]], SetKind::Control)];
        let tight = vec![labeled(&[0, 1, 2, 88, 89], &[&[1, 2]], SetKind::Chain)];
        let eps = 1.5 * complex.radius();
        assert!(check_closure(&controls, &tight, &complex, eps, Some(&e), Some(&e)).passed());
        let padded = vec![labeled(&[0, 1, 2, 40, 89], &[&[1, 2]], SetKind::Chain)];
        assert_eq!(check_closure(&controls, &padded, &complex, eps, Some(&e), Some(&e)).status, Status::Fail);
        let other = vec![labeled(&[50], &[&[2, 1]], SetKind::Chain)];
        assert_eq!(check_closure(&controls, &other, &complex, eps, Some(&e), Some(&e)).status, Status::Skip);
        let full = ThetaSet::full(2);
        assert!(check_closure(&controls, &padded, &complex, eps, Some(&e), Some(&full)).passed());
    }

    #[test]
    fn monotonicity_needs_nesting() {
        let small = vec![labeled(&[1, 2], &[], SetKind::Chain)];
        let large = vec![labeled(&[0, 1, 2], &[], SetKind::Chain)];
        assert!(check_monotonicity(&small, &large, 0.1, 0.2).passed());
        assert!(!check_monotonicity(&large, &small, 0.2, 0.1).passed());
    }
}

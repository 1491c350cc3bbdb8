//! Exhaustive axiom checkers. Every checker either returns an ok verdict or a
//! first-failure witness in canonical order, so diagnostics are deterministic.

use std::collections::{BTreeMap, BTreeSet};

use crate::design::{BlockingSystem, Colouring, Design, GroupedDesign, Label};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub ok: bool,
    pub witness: Option<String>,
}

impl Verdict {
    pub fn ok() -> Self {
        Verdict { ok: true, witness: None }
    }

    pub fn fail(witness: impl Into<String>) -> Self {
        Verdict { ok: false, witness: Some(witness.into()) }
    }
}

/// Graph of point pairs covered by no block (index-1 designs only).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeaveGraph {
    pub vertices: BTreeSet<Label>,
    pub edges: BTreeSet<(Label, Label)>,
}

/// Counts of how many blocks contain each unordered pair.
pub fn pair_counts(d: &Design) -> BTreeMap<(Label, Label), u64> {
    let mut counts = BTreeMap::new();
    for b in &d.blocks {
        for i in 0..b.len() {
            for j in i + 1..b.len() {
                let key = if b[i] <= b[j] {
                    (b[i].clone(), b[j].clone())
                } else {
                    (b[j].clone(), b[i].clone())
                };
                *counts.entry(key).or_insert(0u64) += 1;
            }
        }
    }
    counts
}

fn check_block_shape(d: &Design) -> Result<()> {
    for b in &d.blocks {
        if b.len() < 2 {
            return Err(Error::InvalidArgument(format!("block {:?} has fewer than 2 points", b)));
        }
        let set: BTreeSet<&Label> = b.iter().collect();
        if set.len() != b.len() {
            return Err(Error::InvalidArgument(format!("block {:?} repeats a point", b)));
        }
        for p in b {
            if !d.points.contains(p) {
                return Err(Error::InvalidArgument(format!(
                    "block {:?} uses unknown point {}",
                    b, p
                )));
            }
        }
    }
    Ok(())
}

fn require_uniform(d: &Design) -> Result<usize> {
    check_block_shape(d)?;
    match d.block_size() {
        Some(k) => Ok(k),
        None if d.blocks.is_empty() => Ok(0),
        None => Err(Error::InvalidArgument("mixed block sizes".into())),
    }
}

/// Every unordered pair of points lies in exactly lambda blocks.
pub fn verify_bibd(d: &Design) -> Result<Verdict> {
    require_uniform(d)?;
    let counts = pair_counts(d);
    let pts: Vec<&Label> = d.points.iter().collect();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let n = counts.get(&(pts[i].clone(), pts[j].clone())).copied().unwrap_or(0);
            if n != d.lambda {
                return Ok(Verdict::fail(format!(
                    "pair ({},{}) covered {} times, expected {}",
                    pts[i], pts[j], n, d.lambda
                )));
            }
        }
    }
    Ok(Verdict::ok())
}

/// Every unordered pair lies in at most lambda blocks.
pub fn verify_partial_bibd(d: &Design) -> Result<Verdict> {
    require_uniform(d)?;
    for ((a, b), n) in pair_counts(d) {
        if n > d.lambda {
            return Ok(Verdict::fail(format!(
                "pair ({},{}) covered {} times, more than {}",
                a, b, n, d.lambda
            )));
        }
    }
    Ok(Verdict::ok())
}

fn check_partition(g: &GroupedDesign) -> Option<String> {
    let mut seen: BTreeSet<&Label> = BTreeSet::new();
    for grp in &g.groups {
        if grp.is_empty() {
            return Some("empty group".into());
        }
        for p in grp {
            if !g.design.points.contains(p) {
                return Some(format!("group point {} not in design", p));
            }
            if !seen.insert(p) {
                return Some(format!("point {} in two groups", p));
            }
        }
    }
    if seen.len() != g.design.points.len() {
        return Some("groups do not cover all points".into());
    }
    None
}

/// Cross-group pairs covered exactly lambda times; same-group pairs never.
pub fn verify_gdd(g: &GroupedDesign) -> Result<Verdict> {
    if let Err(e) = check_block_shape(&g.design) {
        return Err(e);
    }
    if let Some(w) = check_partition(g) {
        return Ok(Verdict::fail(w));
    }
    let counts = pair_counts(&g.design);
    let group_of: BTreeMap<&Label, usize> = g
        .groups
        .iter()
        .enumerate()
        .flat_map(|(i, grp)| grp.iter().map(move |p| (p, i)))
        .collect();
    let pts: Vec<&Label> = g.design.points.iter().collect();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let n = counts.get(&(pts[i].clone(), pts[j].clone())).copied().unwrap_or(0);
            let expected = if group_of[pts[i]] == group_of[pts[j]] { 0 } else { g.design.lambda };
            if n != expected {
                return Ok(Verdict::fail(format!(
                    "pair ({},{}) covered {} times, expected {}",
                    pts[i], pts[j], n, expected
                )));
            }
        }
    }
    Ok(Verdict::ok())
}

/// A GDD of uniform group size with number of groups equal to the block size.
pub fn verify_td(g: &GroupedDesign) -> Result<Verdict> {
    let v = verify_gdd(g)?;
    if !v.ok {
        return Ok(v);
    }
    let sizes: BTreeSet<usize> = g.groups.iter().map(|grp| grp.len()).collect();
    if sizes.len() != 1 {
        return Ok(Verdict::fail(format!("unequal group sizes {:?}", sizes)));
    }
    match g.design.block_size() {
        Some(k) if k == g.groups.len() => Ok(Verdict::ok()),
        Some(k) => Ok(Verdict::fail(format!(
            "block size {} differs from group count {}",
            k,
            g.groups.len()
        ))),
        None => Ok(Verdict::fail("no blocks or mixed block sizes")),
    }
}

/// Every block intersects at least two of the (pairwise disjoint) sets.
pub fn verify_blocking_system(d: &Design, bs: &BlockingSystem) -> Result<Verdict> {
    if !bs.pairwise_disjoint() {
        return Err(Error::InvalidArgument("blocking sets overlap".into()));
    }
    for s in &bs.sets {
        for p in s {
            if !d.points.contains(p) {
                return Err(Error::InvalidArgument(format!("blocking set point {} not in design", p)));
            }
        }
    }
    for b in &d.blocks {
        let hit = bs.sets.iter().filter(|s| b.iter().any(|p| s.contains(p))).count();
        if hit < 2 {
            return Ok(Verdict::fail(format!(
                "block {:?} meets only {} blocking set(s)",
                b, hit
            )));
        }
    }
    Ok(Verdict::ok())
}

/// Colour points of S_i with colour i; points outside every set get colour 1.
pub fn blocking_system_to_colouring(d: &Design, bs: &BlockingSystem) -> Result<Colouring> {
    let v = verify_blocking_system(d, bs)?;
    if !v.ok {
        return Err(Error::PreconditionViolation(format!(
            "invalid blocking system: {}",
            v.witness.unwrap_or_default()
        )));
    }
    let mut assignment: BTreeMap<Label, u32> = d.points.iter().map(|p| (p.clone(), 1)).collect();
    for (i, s) in bs.sets.iter().enumerate() {
        for p in s {
            assignment.insert(p.clone(), (i + 1) as u32);
        }
    }
    Ok(Colouring { assignment, c: bs.sets.len().max(1) as u32 })
}

/// No block is monochromatic.
pub fn verify_colouring(d: &Design, col: &Colouring) -> Result<Verdict> {
    for p in &d.points {
        if !col.assignment.contains_key(p) {
            return Err(Error::InvalidArgument(format!("point {} uncoloured", p)));
        }
    }
    for b in &d.blocks {
        let colours: BTreeSet<u32> = b.iter().map(|p| col.assignment[p]).collect();
        if colours.len() <= 1 && b.len() >= 2 {
            return Ok(Verdict::fail(format!("block {:?} monochromatic", b)));
        }
    }
    Ok(Verdict::ok())
}

/// The graph of pairs covered by zero blocks; defined only for index 1.
pub fn leave_graph(d: &Design) -> Result<LeaveGraph> {
    if d.lambda != 1 {
        return Err(Error::InvalidArgument("leave defined only for index 1".into()));
    }
    let v = verify_partial_bibd(d)?;
    if !v.ok {
        return Err(Error::InvalidArgument(format!(
            "not a partial design: {}",
            v.witness.unwrap_or_default()
        )));
    }
    let counts = pair_counts(d);
    let pts: Vec<&Label> = d.points.iter().collect();
    let mut edges = BTreeSet::new();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            if !counts.contains_key(&(pts[i].clone(), pts[j].clone())) {
                edges.insert((pts[i].clone(), pts[j].clone()));
            }
        }
    }
    Ok(LeaveGraph { vertices: d.points.clone(), edges })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeaveShape {
    PerfectMatching,
    K4PlusMatching,
}

fn degrees(lg: &LeaveGraph) -> BTreeMap<&Label, usize> {
    let mut deg: BTreeMap<&Label, usize> = lg.vertices.iter().map(|p| (p, 0)).collect();
    for (a, b) in &lg.edges {
        *deg.get_mut(a).unwrap() += 1;
        *deg.get_mut(b).unwrap() += 1;
    }
    deg
}

/// Check the leave is a perfect matching, or a 4-clique disjointly united with
/// a perfect matching on the remaining vertices.
pub fn verify_leave_shape(d: &Design, shape: LeaveShape) -> Result<Verdict> {
    let lg = leave_graph(d)?;
    let deg = degrees(&lg);
    match shape {
        LeaveShape::PerfectMatching => {
            for (p, dg) in deg {
                if dg != 1 {
                    return Ok(Verdict::fail(format!("vertex {} has leave degree {}", p, dg)));
                }
            }
            Ok(Verdict::ok())
        }
        LeaveShape::K4PlusMatching => {
            let clique: Vec<&Label> = deg.iter().filter(|&(_, &dg)| dg == 3).map(|(&p, _)| p).collect();
            if clique.len() != 4 {
                return Ok(Verdict::fail(format!(
                    "expected 4 vertices of leave degree 3, found {}",
                    clique.len()
                )));
            }
            for i in 0..4 {
                for j in i + 1..4 {
                    let (a, b) = if clique[i] <= clique[j] {
                        (clique[i].clone(), clique[j].clone())
                    } else {
                        (clique[j].clone(), clique[i].clone())
                    };
                    if !lg.edges.contains(&(a.clone(), b.clone())) {
                        return Ok(Verdict::fail(format!("({},{}) missing from 4-clique", a, b)));
                    }
                }
            }
            for (p, dg) in deg {
                if !clique.contains(&p) && dg != 1 {
                    return Ok(Verdict::fail(format!(
                        "non-clique vertex {} has leave degree {}",
                        p, dg
                    )));
                }
            }
            // matching edges must not touch the clique (degrees already force this)
            Ok(Verdict::ok())
        }
    }
}

/// For block size 4 with a half/half 2-set system: every block meets S1 (and
/// so S2) in an odd number of points.
pub fn check_parity_property_k4(g: &GroupedDesign, bs: &BlockingSystem) -> Result<Verdict> {
    if !g.design.blocks.is_empty() && g.design.block_size() != Some(4) {
        return Err(Error::InvalidArgument("block size must be 4".into()));
    }
    if bs.sets.len() != 2 {
        return Err(Error::InvalidArgument("need exactly 2 blocking sets".into()));
    }
    for grp in &g.groups {
        for s in &bs.sets {
            let inter = grp.iter().filter(|p| s.contains(*p)).count();
            if 2 * inter != grp.len() {
                return Err(Error::InvalidArgument(format!(
                    "set meets a group of size {} in {} points, not half",
                    grp.len(),
                    inter
                )));
            }
        }
    }
    for b in &g.design.blocks {
        for (i, s) in bs.sets.iter().enumerate() {
            let inter = b.iter().filter(|p| s.contains(*p)).count();
            if inter % 2 == 0 {
                return Ok(Verdict::fail(format!(
                    "block {:?} meets set {} in {} points",
                    b,
                    i + 1,
                    inter
                )));
            }
        }
    }
    Ok(Verdict::ok())
}

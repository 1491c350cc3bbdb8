//! Weak-colouring solvers: a DSATUR-style greedy, an exact backtracking
//! solver with not-all-equal propagation, a brute-force oracle, and
//! backtracking search for blocking systems (with quota/exclusion variants).

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use crate::design::{BlockingSystem, Colouring, Design, GroupedDesign, Label};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Maximum number of points the exact solver will attempt.
    pub point_cap: usize,
    pub time_budget: Duration,
    pub deterministic: bool,
    pub symmetry_breaking: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            point_cap: 64,
            time_budget: Duration::from_secs(600),
            deterministic: true,
            symmetry_breaking: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChromaticCertificate {
    pub chi: u32,
    pub colouring: Colouring,
    /// Present when chi > the trivial lower bound: a digest of the exhausted
    /// search for chi-1 colours.
    pub infeasibility_witness: Option<String>,
}

/// Deduplicated blocks as point-index lists (multiplicity is irrelevant for
/// colouring: a monochromatic block is monochromatic however often it
/// repeats). Blocks of size < 2 are ignored.
fn index_blocks(d: &Design) -> (Vec<Label>, Vec<Vec<usize>>) {
    let points: Vec<Label> = d.points.iter().cloned().collect();
    let index: std::collections::BTreeMap<&Label, usize> =
        points.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let mut seen = BTreeSet::new();
    let mut blocks = Vec::new();
    for b in &d.blocks {
        if b.len() < 2 {
            continue;
        }
        let mut ib: Vec<usize> = b.iter().map(|p| index[p]).collect();
        ib.sort_unstable();
        ib.dedup();
        if ib.len() >= 2 && seen.insert(ib.clone()) {
            blocks.push(ib);
        }
    }
    (points, blocks)
}

fn to_colouring(points: &[Label], assignment: &[u32], c: u32) -> Colouring {
    Colouring {
        assignment: points.iter().cloned().zip(assignment.iter().copied()).collect(),
        c,
    }
}

/// DSATUR-style heuristic: points in descending block-degree order (ties by
/// canonical order), each assigned the least colour that does not complete a
/// monochromatic block, falling back to the least-used colour.
pub fn greedy_colouring(d: &Design, c: u32) -> Option<Colouring> {
    if c == 0 {
        return None;
    }
    let (points, blocks) = index_blocks(d);
    let n = points.len();
    let mut degree = vec![0usize; n];
    for b in &blocks {
        for &p in b {
            degree[p] += 1;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&p| (std::cmp::Reverse(degree[p]), p));

    let mut colour = vec![0u32; n]; // 0 = uncoloured
    let mut used = vec![0usize; c as usize + 1];
    for &p in &order {
        let mut forbidden = BTreeSet::new();
        for b in &blocks {
            if !b.contains(&p) {
                continue;
            }
            let others: Vec<u32> = b.iter().filter(|&&q| q != p).map(|&q| colour[q]).collect();
            if others.iter().all(|&x| x != 0) {
                let first = others[0];
                if others.iter().all(|&x| x == first) {
                    forbidden.insert(first);
                }
            }
        }
        let pick = (1..=c).find(|x| !forbidden.contains(x)).unwrap_or_else(|| {
            (1..=c).min_by_key(|&x| (used[x as usize], x)).unwrap()
        });
        colour[p] = pick;
        used[pick as usize] += 1;
    }
    let col = to_colouring(&points, &colour, c);
    match crate::verify::verify_colouring(d, &col) {
        Ok(v) if v.ok => Some(col),
        _ => None,
    }
}

struct ChromSearch<'a> {
    blocks: &'a [Vec<usize>],
    incident: Vec<Vec<usize>>, // point -> block ids
    colour: Vec<u32>,
    c: u32,
    symmetry_breaking: bool,
    deadline: Instant,
    nodes: u64,
}

impl<'a> ChromSearch<'a> {
    /// Colours forbidden for p: any block where every other point already has
    /// one common colour (the not-all-equal propagation rule).
    fn forbidden(&self, p: usize) -> Result<BTreeSet<u32>> {
        let mut out = BTreeSet::new();
        for &bi in &self.incident[p] {
            let mut common: Option<u32> = None;
            let mut complete = true;
            for &q in &self.blocks[bi] {
                if q == p {
                    continue;
                }
                match (self.colour[q], common) {
                    (0, _) => {
                        complete = false;
                        break;
                    }
                    (x, None) => common = Some(x),
                    (x, Some(y)) if x == y => {}
                    _ => {
                        complete = false;
                        break;
                    }
                }
            }
            if complete {
                if let Some(x) = common {
                    out.insert(x);
                }
            }
        }
        Ok(out)
    }

    fn solve(&mut self, max_used: u32) -> Result<bool> {
        self.nodes += 1;
        if self.nodes % 4096 == 0 && Instant::now() > self.deadline {
            return Err(Error::ResourceExhausted("time budget exceeded".into()));
        }
        // branch on the most saturated uncoloured point: the one with the
        // most distinct forbidden colours, ties by canonical index
        let mut best: Option<(usize, BTreeSet<u32>)> = None;
        for p in 0..self.colour.len() {
            if self.colour[p] != 0 {
                continue;
            }
            let f = self.forbidden(p)?;
            let better = match &best {
                None => true,
                Some((_, bf)) => f.len() > bf.len(),
            };
            if better {
                let sat = f.len();
                best = Some((p, f));
                if sat as u32 >= self.c {
                    break; // dead end, fail fast below
                }
            }
        }
        let (p, forbidden) = match best {
            None => return Ok(true), // all coloured
            Some(x) => x,
        };
        let cap = if self.symmetry_breaking {
            (max_used + 1).min(self.c)
        } else {
            self.c
        };
        for x in 1..=cap {
            if forbidden.contains(&x) {
                continue;
            }
            self.colour[p] = x;
            if self.solve(max_used.max(x))? {
                return Ok(true);
            }
            self.colour[p] = 0;
        }
        Ok(false)
    }
}

/// Whether the design admits a weak c-colouring; exact, by backtracking.
fn colourable(d: &Design, c: u32, cfg: &SolverConfig, deadline: Instant) -> Result<Option<Colouring>> {
    let (points, blocks) = index_blocks(d);
    let n = points.len();
    if c == 0 {
        return Ok(if n == 0 { Some(to_colouring(&points, &[], 0)) } else { None });
    }
    if c == 1 {
        return Ok(if blocks.is_empty() { Some(to_colouring(&points, &vec![1; n], 1)) } else { None });
    }
    let mut incident = vec![Vec::new(); n];
    for (bi, b) in blocks.iter().enumerate() {
        for &p in b {
            incident[p].push(bi);
        }
    }
    let mut s = ChromSearch {
        blocks: &blocks,
        incident,
        colour: vec![0; n],
        c,
        symmetry_breaking: cfg.symmetry_breaking,
        deadline,
        nodes: 0,
    };
    if s.solve(0)? {
        Ok(Some(to_colouring(&points, &s.colour, c)))
    } else {
        Ok(None)
    }
}

/// The exact weak chromatic number with a valid colouring certificate and a
/// provably exhausted search for one fewer colour.
pub fn exact_chromatic(d: &Design, cfg: &SolverConfig) -> Result<ChromaticCertificate> {
    if d.v() > cfg.point_cap {
        return Err(Error::ResourceExhausted(format!(
            "{} points exceeds cap {}",
            d.v(),
            cfg.point_cap
        )));
    }
    let deadline = Instant::now() + cfg.time_budget;
    let has_blocks = d.blocks.iter().any(|b| b.len() >= 2);
    let lower = if has_blocks { 2 } else { 1 };
    let mut witness = None;
    for c in lower..=(d.v().max(1) as u32) {
        match colourable(d, c, cfg, deadline)? {
            Some(col) => {
                return Ok(ChromaticCertificate { chi: c, colouring: col, infeasibility_witness: witness })
            }
            None => {
                witness = Some(format!("exhausted backtracking search for {} colours", c));
            }
        }
    }
    unreachable!("a design is always colourable with one colour per point")
}

/// Independent oracle: smallest c <= max_c admitting a valid colouring, by
/// enumerating all c^v assignments. Returns None when every c <= max_c fails.
pub fn brute_force_chromatic(d: &Design, max_c: u32) -> Result<Option<u32>> {
    let (points, blocks) = index_blocks(d);
    let n = points.len() as u32;
    if n == 0 {
        return Ok(Some(1));
    }
    let space = (max_c as f64).powi(n as i32);
    if space > 5e8 {
        return Err(Error::UnsupportedSize(format!(
            "{}^{} assignments is too many to enumerate",
            max_c, n
        )));
    }
    'outer: for c in 1..=max_c {
        let total = (c as u64).checked_pow(n).unwrap();
        'assign: for code in 0..total {
            let mut x = code;
            let mut colour = vec![0u32; n as usize];
            for slot in colour.iter_mut() {
                *slot = (x % c as u64) as u32 + 1;
                x /= c as u64;
            }
            for b in &blocks {
                let first = colour[b[0]];
                if b.iter().all(|&p| colour[p] == first) {
                    continue 'assign;
                }
            }
            let _ = points; // labels not needed, existence suffices
            return Ok(Some(c));
        }
        continue 'outer;
    }
    Ok(None)
}

struct SystemSearch<'a> {
    sizes: &'a [usize],
    assignment: Vec<Option<usize>>, // None = undecided; Some(c) with c == sizes.len() meaning "no set"
    set_count: Vec<usize>,
    group_of: Option<Vec<usize>>,
    quota: Option<usize>,
    group_set_count: Vec<Vec<usize>>, // [set][group]
    blocks: Vec<Vec<usize>>,
    incident: Vec<Vec<usize>>,
    undecided: usize,
    deadline: Instant,
    nodes: u64,
}

impl<'a> SystemSearch<'a> {
    fn none_value(&self) -> usize {
        self.sizes.len()
    }

    fn block_feasible(&self, bi: usize) -> bool {
        let b = &self.blocks[bi];
        let mut hit: BTreeSet<usize> = BTreeSet::new();
        let mut undecided = 0usize;
        for &p in b {
            match self.assignment[p] {
                None => undecided += 1,
                Some(v) if v < self.sizes.len() => {
                    hit.insert(v);
                }
                Some(_) => {}
            }
        }
        hit.len() + undecided >= 2
    }

    fn assign(&mut self, p: usize, v: usize) -> bool {
        self.assignment[p] = Some(v);
        self.undecided -= 1;
        if v < self.sizes.len() {
            // keep the counters symmetric with unassign even on failure
            self.set_count[v] += 1;
            let mut over_quota = false;
            if let (Some(groups), Some(q)) = (&self.group_of, self.quota) {
                let g = groups[p];
                self.group_set_count[v][g] += 1;
                over_quota = self.group_set_count[v][g] > q;
            }
            if self.set_count[v] > self.sizes[v] || over_quota {
                return false;
            }
        }
        // enough points must remain to fill every set
        let deficit: usize = self
            .sizes
            .iter()
            .zip(&self.set_count)
            .map(|(&s, &c)| s.saturating_sub(c))
            .sum();
        if deficit > self.undecided {
            return false;
        }
        for &bi in &self.incident[p].clone() {
            if !self.block_feasible(bi) {
                return false;
            }
        }
        true
    }

    fn unassign(&mut self, p: usize) {
        if let Some(v) = self.assignment[p] {
            if v < self.sizes.len() {
                self.set_count[v] -= 1;
                if let (Some(groups), Some(_)) = (&self.group_of, self.quota) {
                    let g = groups[p];
                    self.group_set_count[v][g] -= 1;
                }
            }
        }
        self.assignment[p] = None;
        self.undecided += 1;
    }

    /// Next branch point: an undecided point inside the tightest block that
    /// still needs more set contacts; canonical order otherwise.
    fn pick(&self) -> Option<usize> {
        let mut best: Option<(usize, usize)> = None; // (undecided in block, point)
        for b in self.blocks.iter() {
            let mut hit: BTreeSet<usize> = BTreeSet::new();
            let mut first_undecided = None;
            let mut undecided = 0usize;
            for &p in b {
                match self.assignment[p] {
                    None => {
                        undecided += 1;
                        if first_undecided.is_none() {
                            first_undecided = Some(p);
                        }
                    }
                    Some(v) if v < self.sizes.len() => {
                        hit.insert(v);
                    }
                    Some(_) => {}
                }
            }
            if hit.len() < 2 && undecided > 0 {
                let cand = (undecided, first_undecided.unwrap());
                if best.map_or(true, |b0| cand < b0) {
                    best = Some(cand);
                }
            }
        }
        if let Some((_, p)) = best {
            return Some(p);
        }
        self.assignment.iter().position(|a| a.is_none())
    }

    fn solve(&mut self) -> Result<bool> {
        self.nodes += 1;
        if self.nodes % 1024 == 0 && Instant::now() > self.deadline {
            return Err(Error::ResourceExhausted("search budget exceeded".into()));
        }
        let p = match self.pick() {
            None => return Ok(true),
            Some(p) => p,
        };
        for v in 0..=self.none_value() {
            if self.assign(p, v) && self.solve()? {
                return Ok(true);
            }
            self.unassign(p);
        }
        Ok(false)
    }
}

fn run_system_search(
    points: &[Label],
    blocks: &[Vec<usize>],
    sizes: &[usize],
    group_of: Option<Vec<usize>>,
    quota: Option<usize>,
    forced_none: &[usize],
    cfg: &SolverConfig,
) -> Result<Option<BlockingSystem>> {
    let n = points.len();
    let n_groups = group_of.as_ref().map(|g| g.iter().max().map_or(0, |m| m + 1)).unwrap_or(0);
    let mut incident = vec![Vec::new(); n];
    for (bi, b) in blocks.iter().enumerate() {
        for &p in b {
            incident[p].push(bi);
        }
    }
    let mut search = SystemSearch {
        sizes,
        assignment: vec![None; n],
        set_count: vec![0; sizes.len()],
        group_of,
        quota,
        group_set_count: vec![vec![0; n_groups.max(1)]; sizes.len()],
        blocks: blocks.to_vec(),
        incident,
        undecided: n,
        deadline: Instant::now() + cfg.time_budget,
        nodes: 0,
    };
    let none = search.none_value();
    for &p in forced_none {
        if !search.assign(p, none) {
            return Ok(None);
        }
    }
    if search.solve()? {
        let mut sets: Vec<BTreeSet<Label>> = vec![BTreeSet::new(); sizes.len()];
        for (p, a) in search.assignment.iter().enumerate() {
            if let Some(v) = a {
                if *v < sizes.len() {
                    sets[*v].insert(points[p].clone());
                }
            }
        }
        Ok(Some(BlockingSystem::new(sets)))
    } else {
        Ok(None)
    }
}

/// Search for a blocking system with exactly the requested set sizes.
/// Ok(Some) = found, Ok(None) = proven nonexistent, Err(ResourceExhausted) =
/// budget ran out before the search space was exhausted.
pub fn find_blocking_system(
    d: &Design,
    sizes: &[usize],
    cfg: &SolverConfig,
) -> Result<Option<BlockingSystem>> {
    if sizes.iter().sum::<usize>() > d.v() {
        return Err(Error::InvalidArgument("set sizes exceed point count".into()));
    }
    let (points, blocks) = index_blocks(d);
    let found = run_system_search(&points, &blocks, sizes, None, None, &[], cfg)?;
    if let Some(bs) = &found {
        debug_assert!(crate::verify::verify_blocking_system(d, bs).unwrap().ok);
    }
    Ok(found)
}

/// As find_blocking_system but on a grouped design, honouring a uniform
/// per-set-per-group intersection quota and an optional excluded block: the
/// system must be valid for blocks minus the excluded one and its sets must
/// avoid the excluded block's points.
pub fn find_blocking_system_constrained(
    g: &GroupedDesign,
    sizes: &[usize],
    per_group_quota: Option<usize>,
    exclude: Option<&[Label]>,
    cfg: &SolverConfig,
) -> Result<Option<BlockingSystem>> {
    if sizes.iter().sum::<usize>() > g.design.v() {
        return Err(Error::InvalidArgument("set sizes exceed point count".into()));
    }
    if let Some(q) = per_group_quota {
        if let Some(min_group) = g.groups.iter().map(|grp| grp.len()).min() {
            if q > min_group {
                return Err(Error::InvalidArgument(format!(
                    "quota {} exceeds smallest group size {}",
                    q, min_group
                )));
            }
        }
        let n_groups = g.groups.len();
        for (i, &s) in sizes.iter().enumerate() {
            if s > q * n_groups {
                return Err(Error::InvalidArgument(format!(
                    "set {} size {} unreachable under quota {}",
                    i + 1,
                    s,
                    q
                )));
            }
        }
    }
    let (points, mut blocks) = index_blocks(&g.design);
    let index: std::collections::BTreeMap<&Label, usize> =
        points.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let mut forced_none = Vec::new();
    if let Some(excl) = exclude {
        let mut excl_sorted: Vec<usize> = excl
            .iter()
            .map(|p| {
                index
                    .get(p)
                    .copied()
                    .ok_or_else(|| Error::InvalidArgument(format!("excluded point {} unknown", p)))
            })
            .collect::<Result<_>>()?;
        excl_sorted.sort_unstable();
        let pos = blocks.iter().position(|b| *b == excl_sorted).ok_or_else(|| {
            Error::InvalidArgument("excluded block is not a block of the design".into())
        })?;
        blocks.remove(pos);
        forced_none = excl_sorted;
    }
    let group_of: Vec<usize> = points
        .iter()
        .map(|p| {
            g.group_of(p)
                .ok_or_else(|| Error::InvalidArgument(format!("point {} has no group", p)))
        })
        .collect::<Result<_>>()?;
    let found = run_system_search(
        &points,
        &blocks,
        sizes,
        Some(group_of),
        per_group_quota,
        &forced_none,
        cfg,
    )?;
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::{verify_blocking_system, verify_colouring};

    fn fano() -> Design {
        let blocks: Vec<Vec<Label>> = [
            [1, 2, 3],
            [1, 4, 5],
            [1, 6, 7],
            [2, 4, 6],
            [2, 5, 7],
            [3, 4, 7],
            [3, 5, 6],
        ]
        .iter()
        .map(|b| b.iter().map(|x| x.to_string()).collect())
        .collect();
        Design::new((1..=7).map(|x| x.to_string()), blocks, 1)
    }

    fn single_block(k: usize) -> Design {
        let pts: Vec<Label> = (0..k).map(|x| x.to_string()).collect();
        Design::new(pts.clone(), vec![pts], 1)
    }

    #[test]
    fn greedy_on_fano() {
        let col = greedy_colouring(&fano(), 3).expect("3 colours suffice");
        assert!(verify_colouring(&fano(), &col).unwrap().ok);
        assert!(greedy_colouring(&fano(), 2).is_none());
        assert!(greedy_colouring(&single_block(4), 2).is_some());
    }

    #[test]
    fn exact_chi_fano() {
        let cert = exact_chromatic(&fano(), &SolverConfig::default()).unwrap();
        assert_eq!(cert.chi, 3);
        assert!(verify_colouring(&fano(), &cert.colouring).unwrap().ok);
        assert!(cert.infeasibility_witness.is_some());
    }

    #[test]
    fn exact_chi_trivial_cases() {
        for k in 3..=6 {
            assert_eq!(exact_chromatic(&single_block(k), &SolverConfig::default()).unwrap().chi, 2);
        }
        let empty = Design::new((0..5).map(|x| x.to_string()), Vec::new(), 1);
        assert_eq!(exact_chromatic(&empty, &SolverConfig::default()).unwrap().chi, 1);
    }

    #[test]
    fn brute_force_matches_exact_on_fixtures() {
        assert_eq!(brute_force_chromatic(&fano(), 4).unwrap(), Some(3));
        assert_eq!(brute_force_chromatic(&single_block(3), 4).unwrap(), Some(2));
        let empty = Design::new(Vec::<Label>::new(), Vec::new(), 1);
        assert_eq!(brute_force_chromatic(&empty, 1).unwrap(), Some(1));
    }

    #[test]
    fn point_cap_enforced() {
        let cfg = SolverConfig { point_cap: 3, ..Default::default() };
        assert!(matches!(exact_chromatic(&fano(), &cfg), Err(Error::ResourceExhausted(_))));
    }

    #[test]
    fn blocking_search_single_block() {
        let d = single_block(4);
        let bs = find_blocking_system(&d, &[1, 1], &SolverConfig::default())
            .unwrap()
            .expect("two singletons inside the block");
        assert!(verify_blocking_system(&d, &bs).unwrap().ok);
        assert_eq!(bs.sizes(), vec![1, 1]);
    }

    #[test]
    fn constrained_search_honours_quota() {
        // regression: backtracking out of a full set used to desync the
        // per-group counters on the quota path
        let t = crate::construct::td_4_13();
        let found = find_blocking_system_constrained(
            &t.td,
            &[16, 16, 16],
            Some(4),
            None,
            &SolverConfig::default(),
        )
        .unwrap()
        .expect("the stored system shows one exists");
        assert!(verify_blocking_system(&t.td.design, &found).unwrap().ok);
        for s in &found.sets {
            for g in &t.td.groups {
                assert!(g.iter().filter(|p| s.contains(*p)).count() <= 4);
            }
        }
    }

    #[test]
    fn fano_has_no_2_system() {
        // a 2-blocking system would imply 2-colourability
        let out = find_blocking_system(&fano(), &[3, 2], &SolverConfig::default()).unwrap();
        assert!(out.is_none());
    }

    #[test]
    fn system_implies_chi_bound() {
        let d = single_block(5);
        let bs = find_blocking_system(&d, &[2, 2], &SolverConfig::default()).unwrap().unwrap();
        assert!(verify_blocking_system(&d, &bs).unwrap().ok);
        let chi = exact_chromatic(&d, &SolverConfig::default()).unwrap().chi;
        assert!(chi <= 2);
    }

    #[test]
    fn oversized_request_rejected() {
        assert!(find_blocking_system(&fano(), &[5, 5], &SolverConfig::default()).is_err());
    }
}

//! Combinators that assemble larger designs from verified ingredients:
//! group filling (with or without an extra point), weight inflation, the
//! product construction over a transversal-design source, common-tail
//! assembly, and the block-size-3 chain ("ladder") construction.

use std::collections::{BTreeMap, BTreeSet};

use crate::colour::{exact_chromatic, SolverConfig};
use crate::construct::{bibd_3_blocked, gdd_h_1_6, td_3_3_pair, TdPair, TdWithSystems};
use crate::design::{is_admissible, BlockingSystem, Design, GroupedDesign, Label};
use crate::error::{Error, Result};
use crate::verify::{
    verify_bibd, verify_blocking_system, verify_gdd, verify_leave_shape, LeaveShape,
};

/// Label of the extra point added by `fill_groups` when requested.
pub const INFINITY: &str = "inf";

fn product_label(base: &str, level: usize) -> Label {
    format!("({},{})", base, level)
}

fn require_ok(v: crate::verify::Verdict, what: &str) -> Result<()> {
    if v.ok {
        Ok(())
    } else {
        Err(Error::PreconditionViolation(format!(
            "{}: {}",
            what,
            v.witness.unwrap_or_default()
        )))
    }
}

/// Ingredients for filling the groups of a GDD with block designs.
#[derive(Debug, Clone)]
pub struct FillSpec {
    pub base: GroupedDesign,
    /// Group index -> design on that group (plus `inf` when `add_infinity`)
    /// together with its blocking system. Groups of size 1 may be omitted
    /// when no extra point is added.
    pub fillers: BTreeMap<usize, (Design, BlockingSystem)>,
    pub add_infinity: bool,
    /// Blocking system of the base design, if it carries one; its sets are
    /// unioned index-wise with the filler systems.
    pub base_system: Option<BlockingSystem>,
}

/// Fill every group of a GDD with a block design on the group (optionally
/// sharing one extra point), producing a design on the whole point set.
pub fn fill_groups(spec: &FillSpec) -> Result<(Design, BlockingSystem)> {
    let base = &spec.base;
    require_ok(verify_gdd(base)?, "base is not a GDD")?;
    if spec.fillers.is_empty() && base.design.blocks.is_empty() {
        return Err(Error::InvalidArgument("nothing to fill".into()));
    }
    if spec.add_infinity && base.design.points.contains(INFINITY) {
        return Err(Error::InvalidArgument("base already uses the point 'inf'".into()));
    }
    for (i, g) in base.groups.iter().enumerate() {
        if !spec.fillers.contains_key(&i) && (spec.add_infinity || g.len() >= 2) {
            return Err(Error::InvalidArgument(format!(
                "group {} (size {}) has no filler",
                i,
                g.len()
            )));
        }
    }
    let mut set_count: Option<usize> = spec.base_system.as_ref().map(|s| s.sets.len());
    for (&gi, (fd, fs)) in &spec.fillers {
        let group = base
            .groups
            .get(gi)
            .ok_or_else(|| Error::InvalidArgument(format!("no group with index {}", gi)))?;
        let mut expected: BTreeSet<Label> = group.clone();
        if spec.add_infinity {
            expected.insert(INFINITY.to_string());
        }
        if fd.points != expected {
            return Err(Error::InvalidArgument(format!(
                "filler for group {} is not on the group's points",
                gi
            )));
        }
        if fd.lambda != base.design.lambda {
            return Err(Error::InvalidArgument(format!(
                "filler index {} differs from base index {}",
                fd.lambda, base.design.lambda
            )));
        }
        require_ok(verify_bibd(fd)?, "filler is not a BIBD")?;
        require_ok(verify_blocking_system(fd, fs)?, "filler blocking system invalid")?;
        match set_count {
            None => set_count = Some(fs.sets.len()),
            Some(n) if n == fs.sets.len() => {}
            Some(n) => {
                return Err(Error::InvalidArgument(format!(
                    "filler systems disagree on set count ({} vs {})",
                    n,
                    fs.sets.len()
                )))
            }
        }
    }
    let m = set_count.unwrap_or(0);
    let mut sets: Vec<BTreeSet<Label>> = match &spec.base_system {
        Some(bs) => bs.sets.clone(),
        None => vec![BTreeSet::new(); m],
    };
    let mut points = base.design.points.clone();
    if spec.add_infinity {
        points.insert(INFINITY.to_string());
    }
    let mut blocks = base.design.blocks.clone();
    for (fd, fs) in spec.fillers.values() {
        blocks.extend(fd.blocks.iter().cloned());
        for (i, s) in fs.sets.iter().enumerate() {
            sets[i].extend(s.iter().cloned());
        }
    }
    let out = Design::new(points, blocks, base.design.lambda);
    let system = BlockingSystem::new(sets);
    if !system.pairwise_disjoint() {
        return Err(Error::InvalidArgument("combined blocking sets overlap".into()));
    }
    require_ok(verify_bibd(&out)?, "filled design is not a BIBD")?;
    require_ok(verify_blocking_system(&out, &system)?, "combined blocking system invalid")?;
    Ok((out, system))
}

/// Fill every group of a uniform GDD with a relabelled copy of one filler
/// template, aligning the template's two blocking sets with prescribed halves
/// of each group.
pub fn fill_groups_no_infinity(
    base: &GroupedDesign,
    filler: &Design,
    filler_system: &BlockingSystem,
    halves: &[(BTreeSet<Label>, BTreeSet<Label>)],
) -> Result<(Design, BlockingSystem)> {
    require_ok(verify_gdd(base)?, "base is not a GDD")?;
    let y = base.groups.first().map(|g| g.len()).unwrap_or(0);
    if base.groups.iter().any(|g| g.len() != y) {
        return Err(Error::InvalidArgument("base group sizes are not uniform".into()));
    }
    if filler.v() != y {
        return Err(Error::InvalidArgument(format!(
            "filler has {} points, groups have {}",
            filler.v(),
            y
        )));
    }
    if filler.lambda != base.design.lambda {
        return Err(Error::InvalidArgument("filler index differs from base index".into()));
    }
    require_ok(verify_bibd(filler)?, "filler is not a BIBD")?;
    require_ok(verify_blocking_system(filler, filler_system)?, "filler system invalid")?;
    if filler_system.sets.len() != 2 {
        return Err(Error::InvalidArgument("filler system must have two sets".into()));
    }
    if halves.len() != base.groups.len() {
        return Err(Error::InvalidArgument("one pair of halves required per group".into()));
    }
    let mut blocks = base.design.blocks.clone();
    let mut s1: BTreeSet<Label> = BTreeSet::new();
    let mut s2: BTreeSet<Label> = BTreeSet::new();
    for (g, (h1, h2)) in base.groups.iter().zip(halves) {
        if !h1.is_subset(g) || !h2.is_subset(g) || h1.intersection(h2).next().is_some() {
            return Err(Error::InvalidArgument("halves are not disjoint subsets of the group".into()));
        }
        if h1.len() != filler_system.sets[0].len() || h2.len() != filler_system.sets[1].len() {
            return Err(Error::InvalidArgument("half sizes do not match the filler system".into()));
        }
        // template point -> group point, aligned set-by-set
        let mut map: BTreeMap<Label, Label> = BTreeMap::new();
        fn bind(src: Vec<&Label>, dst: Vec<&Label>, map: &mut BTreeMap<Label, Label>) {
            for (s, d) in src.into_iter().zip(dst) {
                map.insert(s.clone(), d.clone());
            }
        }
        bind(
            filler_system.sets[0].iter().collect(),
            h1.iter().collect(),
            &mut map,
        );
        bind(
            filler_system.sets[1].iter().collect(),
            h2.iter().collect(),
            &mut map,
        );
        let used: BTreeSet<&Label> = filler_system.sets.iter().flatten().collect();
        let rest_src: Vec<&Label> = filler.points.iter().filter(|p| !used.contains(p)).collect();
        let rest_dst: Vec<&Label> =
            g.iter().filter(|p| !h1.contains(*p) && !h2.contains(*p)).collect();
        bind(rest_src, rest_dst, &mut map);
        for b in &filler.blocks {
            blocks.push(b.iter().map(|p| map[p].clone()).collect());
        }
        s1.extend(h1.iter().cloned());
        s2.extend(h2.iter().cloned());
    }
    let out = Design::new(base.design.points.iter().cloned(), blocks, base.design.lambda);
    let system = BlockingSystem::new(vec![s1, s2]);
    require_ok(verify_bibd(&out)?, "filled design is not a BIBD")?;
    require_ok(verify_blocking_system(&out, &system)?, "combined system invalid")?;
    Ok((out, system))
}

/// Replace every block of a master GDD by a copy of an ingredient GDD on
/// blockpoints x levels, producing a GDD whose groups are the master groups
/// inflated by the weight. Ingredient half/half systems are aligned so that
/// the output system is (all points) x (low levels) / (all points) x (high
/// levels).
pub fn wilson_inflate(
    master: &GroupedDesign,
    weight: usize,
    ingredients: &BTreeMap<usize, (GroupedDesign, BlockingSystem)>,
) -> Result<(GroupedDesign, BlockingSystem)> {
    if weight == 0 {
        return Err(Error::InvalidArgument("weight must be positive".into()));
    }
    require_ok(verify_gdd(master)?, "master is not a GDD")?;
    let half = weight / 2;
    let mut lambda_ing: Option<u64> = None;
    for (&s, (ig, isys)) in ingredients {
        if ig.groups.len() != s || ig.groups.iter().any(|g| g.len() != weight) {
            return Err(Error::InvalidArgument(format!(
                "ingredient for size {} must have {} groups of size {}",
                s, s, weight
            )));
        }
        require_ok(verify_gdd(ig)?, "ingredient is not a GDD")?;
        if weight >= 2 {
            if isys.sets.len() != 2 {
                return Err(Error::InvalidArgument("ingredient system must have two sets".into()));
            }
            for g in &ig.groups {
                for set in &isys.sets {
                    if g.iter().filter(|p| set.contains(*p)).count() != half {
                        return Err(Error::InvalidArgument(
                            "ingredient system does not split every group in half".into(),
                        ));
                    }
                }
            }
            require_ok(verify_blocking_system(&ig.design, isys)?, "ingredient system invalid")?;
        }
        match lambda_ing {
            None => lambda_ing = Some(ig.design.lambda),
            Some(l) if l == ig.design.lambda => {}
            Some(_) => {
                return Err(Error::InvalidArgument("ingredient indices disagree".into()))
            }
        }
    }
    let lambda_ing = lambda_ing.unwrap_or(1);
    let mut blocks: Vec<Vec<Label>> = Vec::new();
    for a in &master.design.blocks {
        let (ig, isys) = ingredients.get(&a.len()).ok_or_else(|| {
            Error::InvalidArgument(format!("no ingredient for block size {}", a.len()))
        })?;
        // ingredient point -> (master point of matching group, aligned level)
        let mut map: BTreeMap<Label, Label> = BTreeMap::new();
        for (j, g) in ig.groups.iter().enumerate() {
            let target = &a[j];
            let mut level = 0usize;
            let place = |pts: Vec<&Label>, level: &mut usize, map: &mut BTreeMap<Label, Label>| {
                for p in pts {
                    map.insert(p.clone(), product_label(target, *level));
                    *level += 1;
                }
            };
            if weight >= 2 {
                place(
                    g.iter().filter(|p| isys.sets[0].contains(*p)).collect(),
                    &mut level,
                    &mut map,
                );
                place(
                    g.iter().filter(|p| isys.sets[1].contains(*p)).collect(),
                    &mut level,
                    &mut map,
                );
                place(
                    g.iter()
                        .filter(|p| !isys.sets[0].contains(*p) && !isys.sets[1].contains(*p))
                        .collect(),
                    &mut level,
                    &mut map,
                );
            } else {
                place(g.iter().collect(), &mut level, &mut map);
            }
        }
        for b in &ig.design.blocks {
            blocks.push(b.iter().map(|p| map[p].clone()).collect());
        }
    }
    let points: Vec<Label> = master
        .design
        .points
        .iter()
        .flat_map(|p| (0..weight).map(move |l| product_label(p, l)))
        .collect();
    let groups: Vec<BTreeSet<Label>> = master
        .groups
        .iter()
        .map(|g| g.iter().flat_map(|p| (0..weight).map(move |l| product_label(p, l))).collect())
        .collect();
    let out = GroupedDesign {
        design: Design::new(points, blocks, master.design.lambda * lambda_ing),
        groups,
    };
    let s1: BTreeSet<Label> = master
        .design
        .points
        .iter()
        .flat_map(|p| (0..half).map(move |l| product_label(p, l)))
        .collect();
    let s2: BTreeSet<Label> = master
        .design
        .points
        .iter()
        .flat_map(|p| (half..2 * half).map(move |l| product_label(p, l)))
        .collect();
    Ok((out, BlockingSystem::new(vec![s1, s2])))
}

/// Transversal-design source for the product construction: either a TD with
/// whole/punctured systems, or the twisted pair of TD(3,3)s.
#[derive(Debug, Clone)]
pub enum TdSource {
    Lines(TdWithSystems),
    Pair(TdPair),
}

#[derive(Debug, Clone)]
pub struct ProductResult {
    pub design: Design,
    /// Blocks every block outside the embedded copy; when the TD source
    /// leaves one level free of its blocking sets (the whole/punctured
    /// sources), it is valid for the entire design.
    pub system: BlockingSystem,
    /// The distinguished outer blocks, re-embedded on the z* level.
    pub embedded_copy: Vec<Vec<Label>>,
    /// Level index used for z* (always 0).
    pub z_star: usize,
}

/// Point-by-level product of an outer design with a transversal design: each
/// outer block becomes a TD on block x levels (marked blocks use the variant
/// containing the level-z* transversal), and each outer point's column gets a
/// copy of the column design.
pub fn product_construction(
    outer: &Design,
    outer_system: &BlockingSystem,
    marked: &[Vec<Label>],
    source: &TdSource,
    column: &(Design, BlockingSystem),
) -> Result<ProductResult> {
    let (td_groups, block_size) = match source {
        TdSource::Lines(t) => (&t.td.groups, t.td.groups.len()),
        TdSource::Pair(t) => (&t.base.groups, 3),
    };
    let p = td_groups[0].len();
    if outer.block_size().map_or(false, |k| k != block_size) {
        return Err(Error::InvalidArgument(format!(
            "outer block size does not match the TD block size {}",
            block_size
        )));
    }
    require_ok(verify_bibd(outer)?, "outer is not a BIBD")?;
    require_ok(verify_blocking_system(outer, outer_system)?, "outer system invalid")?;
    let (col, col_sys) = column;
    if col.v() != p {
        return Err(Error::UnsupportedSize(format!(
            "column design has {} points, need {}",
            col.v(),
            p
        )));
    }
    if col.lambda != outer.lambda {
        return Err(Error::InvalidArgument("column index differs from outer index".into()));
    }
    require_ok(verify_bibd(col)?, "column is not a BIBD")?;

    // a marked block may repeat (index > 1); track remaining multiplicities
    let mut marked_left: BTreeMap<Vec<Label>, usize> = BTreeMap::new();
    for b in marked {
        let mut b = b.clone();
        b.sort();
        if !outer.blocks.contains(&b) {
            return Err(Error::InvalidArgument(format!("marked block {:?} not in outer", b)));
        }
        *marked_left.entry(b).or_insert(0) += 1;
    }

    // level maps: td point -> (group index, level), with level 0 = z*
    let (whole_map, marked_map, level_classes) = match source {
        TdSource::Lines(t) => lines_level_maps(t)?,
        TdSource::Pair(t) => pair_level_maps(t)?,
    };
    let d = level_classes.len();

    // column point -> level, aligning the column system sets with the classes
    let col_map: BTreeMap<&Label, usize> = {
        if col_sys.sets.len() != d {
            return Err(Error::InvalidArgument(format!(
                "column system must have {} sets to match the TD source",
                d
            )));
        }
        let mut map: BTreeMap<&Label, usize> = BTreeMap::new();
        let mut free: Vec<usize> = (0..p).collect();
        for (set, class) in col_sys.sets.iter().zip(&level_classes) {
            if set.len() != class.len() {
                return Err(Error::InvalidArgument(
                    "column system sizes do not match the TD level classes".into(),
                ));
            }
            for (pt, &lvl) in set.iter().zip(class.iter()) {
                map.insert(pt, lvl);
                free.retain(|&l| l != lvl);
            }
        }
        let rest: Vec<&Label> = col.points.iter().filter(|pt| !map.contains_key(*pt)).collect();
        for (pt, lvl) in rest.into_iter().zip(free) {
            map.insert(pt, lvl);
        }
        map
    };

    let mut blocks: Vec<Vec<Label>> = Vec::new();
    let mut embedded: Vec<Vec<Label>> = Vec::new();
    let (base_blocks, marked_blocks, special) = match source {
        TdSource::Lines(t) => (&t.td.design.blocks, &t.td.design.blocks, Some(&t.special_block)),
        TdSource::Pair(t) => (&t.base.design.blocks, &t.twisted.design.blocks, None),
    };
    for a in &outer.blocks {
        let use_marked = match marked_left.get_mut(a) {
            Some(n) if *n > 0 => {
                *n -= 1;
                true
            }
            _ => false,
        };
        let (src_blocks, map) = if use_marked {
            (marked_blocks, &marked_map)
        } else {
            (base_blocks, &whole_map)
        };
        for b in src_blocks {
            let out: Vec<Label> = b
                .iter()
                .map(|pt| {
                    let (gi, lvl) = map[pt];
                    product_label(&a[gi], lvl)
                })
                .collect();
            blocks.push(out);
        }
        if use_marked {
            let copy_src: Vec<&Label> = match special {
                Some(s) => s.iter().collect(),
                // the twisted design contains the level-0 transversal
                None => Vec::new(),
            };
            let mut copy: Vec<Label> = if copy_src.is_empty() {
                a.iter().map(|y| product_label(y, 0)).collect()
            } else {
                copy_src
                    .iter()
                    .map(|pt| {
                        let (gi, lvl) = marked_map[*pt];
                        debug_assert_eq!(lvl, 0);
                        product_label(&a[gi], lvl)
                    })
                    .collect()
            };
            copy.sort();
            embedded.push(copy);
        }
    }
    if marked_left.values().any(|&n| n > 0) {
        return Err(Error::InvalidArgument(
            "marked blocks exceed their multiplicity in the outer design".into(),
        ));
    }
    for y in &outer.points {
        for b in &col.blocks {
            blocks.push(b.iter().map(|pt| product_label(y, col_map[pt])).collect());
        }
    }
    let points: Vec<Label> = outer
        .points
        .iter()
        .flat_map(|y| (0..p).map(move |l| product_label(y, l)))
        .collect();
    let design = Design::new(points, blocks, outer.lambda);

    // one set per level class, extended by the outer sets on the z* level
    // whenever z* itself is outside every class
    let zstar_in_classes = level_classes.iter().any(|c| c.contains(&0));
    let c_out = outer_system.sets.len();
    let mut sets: Vec<BTreeSet<Label>> = Vec::new();
    for i in 0..d.max(c_out) {
        let mut s: BTreeSet<Label> = BTreeSet::new();
        if i < d {
            for y in &outer.points {
                for &l in &level_classes[i] {
                    s.insert(product_label(y, l));
                }
            }
        }
        if !zstar_in_classes && i < c_out {
            for r in &outer_system.sets[i] {
                s.insert(product_label(r, 0));
            }
        }
        sets.push(s);
    }
    Ok(ProductResult {
        design,
        system: BlockingSystem::new(sets),
        embedded_copy: embedded,
        z_star: 0,
    })
}

type LevelMap = BTreeMap<Label, (usize, usize)>;

/// Level maps for a whole/punctured TD source: the whole system's sets occupy
/// the level classes 1..=q, q+1..=2q, ...; the per-group leftover points take
/// the free levels with the special block's points pinned to level 0.
fn lines_level_maps(t: &TdWithSystems) -> Result<(LevelMap, LevelMap, Vec<Vec<usize>>)> {
    let p = t.td.groups[0].len();
    let d = t.whole_system.sets.len();
    if t.punctured_system.sets.len() != d {
        return Err(Error::InvalidArgument("system set counts disagree".into()));
    }
    let q = t.td.groups[0].iter().filter(|pt| t.whole_system.sets[0].contains(*pt)).count();
    if d * q >= p {
        return Err(Error::InvalidArgument(
            "TD systems leave no level free for z*".into(),
        ));
    }
    let classes: Vec<Vec<usize>> =
        (0..d).map(|i| (i * q + 1..=(i + 1) * q).collect()).collect();
    let build = |sets: &[BTreeSet<Label>], pinned: Option<&Vec<Label>>| -> Result<LevelMap> {
        let mut map = LevelMap::new();
        for (gi, g) in t.td.groups.iter().enumerate() {
            let mut free: Vec<usize> = {
                let mut f = vec![0];
                f.extend(d * q + 1..p);
                f
            };
            for (set, class) in sets.iter().zip(&classes) {
                let members: Vec<&Label> = g.iter().filter(|pt| set.contains(*pt)).collect();
                if members.len() != q {
                    return Err(Error::InvalidArgument(
                        "system set does not meet every group uniformly".into(),
                    ));
                }
                for (pt, &lvl) in members.into_iter().zip(class.iter()) {
                    map.insert(pt.clone(), (gi, lvl));
                }
            }
            if let Some(block) = pinned {
                let inside: Vec<&Label> = g.iter().filter(|pt| block.contains(pt)).collect();
                if inside.len() != 1 || map.contains_key(inside[0]) {
                    return Err(Error::InvalidArgument(
                        "special block must take the leftover point of each group".into(),
                    ));
                }
                map.insert(inside[0].clone(), (gi, 0));
                free.retain(|&l| l != 0);
            }
            let rest: Vec<&Label> = g.iter().filter(|pt| !map.contains_key(*pt)).collect();
            for (pt, lvl) in rest.into_iter().zip(free) {
                map.insert(pt.clone(), (gi, lvl));
            }
        }
        Ok(map)
    };
    let whole = build(&t.whole_system.sets, None)?;
    let marked = build(&t.punctured_system.sets, Some(&t.special_block))?;
    Ok((whole, marked, classes))
}

/// Level maps for the TD(3,3) pair: the partition system's sets are the level
/// classes themselves, the twisted design's level-0 transversal is the copy.
fn pair_level_maps(t: &TdPair) -> Result<(LevelMap, LevelMap, Vec<Vec<usize>>)> {
    let mut map = LevelMap::new();
    for (gi, g) in t.base.groups.iter().enumerate() {
        for pt in g {
            let lvl = t
                .partition_system
                .sets
                .iter()
                .position(|s| s.contains(pt))
                .ok_or_else(|| {
                    Error::InvalidArgument("partition system does not cover the TD points".into())
                })?;
            map.insert(pt.clone(), (gi, lvl));
        }
    }
    let classes = vec![vec![0], vec![1], vec![2]];
    Ok((map.clone(), map, classes))
}

/// Glue a GDD whose last group is the "exceptional" one with designs sharing
/// a common tail U: ordinary groups get a GDD on group+U with U as a group,
/// the last group gets a BIBD on group+U.
pub fn common_tail_fill(
    base: &GroupedDesign,
    base_system: &BlockingSystem,
    tail: &BTreeSet<Label>,
    tail_halves: (&BTreeSet<Label>, &BTreeSet<Label>),
    per_group: &BTreeMap<usize, (GroupedDesign, BlockingSystem)>,
    last: &(Design, BlockingSystem),
) -> Result<(Design, BlockingSystem)> {
    require_ok(verify_gdd(base)?, "base is not a GDD")?;
    if base_system.sets.len() != 2 {
        return Err(Error::InvalidArgument("base system must have two sets".into()));
    }
    require_ok(verify_blocking_system(&base.design, base_system)?, "base system invalid")?;
    if tail.iter().any(|p| base.design.points.contains(p)) {
        return Err(Error::InvalidArgument("tail must be disjoint from the base points".into()));
    }
    let (u1, u2) = tail_halves;
    if !u1.is_subset(tail) || !u2.is_subset(tail) || u1.intersection(u2).next().is_some() {
        return Err(Error::InvalidArgument("tail halves must be disjoint subsets of the tail".into()));
    }
    let n = base.groups.len();
    if n < 2 {
        return Err(Error::InvalidArgument("base needs at least two groups".into()));
    }
    let last_group = &base.groups[n - 1];
    let (r1, r2) = (&base_system.sets[0], &base_system.sets[1]);
    let mut blocks = base.design.blocks.clone();
    for (i, g) in base.groups.iter().enumerate().take(n - 1) {
        let (piece, psys) = per_group
            .get(&i)
            .ok_or_else(|| Error::InvalidArgument(format!("missing per_group entry {}", i)))?;
        let mut expected: BTreeSet<Label> = g.clone();
        expected.extend(tail.iter().cloned());
        if piece.design.points != expected {
            return Err(Error::InvalidArgument(format!(
                "per_group {} is not on group+tail",
                i
            )));
        }
        if !piece.groups.iter().any(|pg| pg == tail) {
            return Err(Error::InvalidArgument(format!(
                "per_group {} does not keep the tail as a group",
                i
            )));
        }
        if piece.design.lambda != base.design.lambda {
            return Err(Error::InvalidArgument("per_group index differs from base index".into()));
        }
        require_ok(verify_gdd(piece)?, "per_group piece is not a GDD")?;
        let want1: BTreeSet<Label> =
            g.iter().filter(|p| r1.contains(*p)).chain(u1.iter()).cloned().collect();
        let want2: BTreeSet<Label> =
            g.iter().filter(|p| r2.contains(*p)).chain(u2.iter()).cloned().collect();
        if psys.sets.len() != 2 || psys.sets[0] != want1 || psys.sets[1] != want2 {
            return Err(Error::InvalidArgument(format!(
                "per_group {} system is not aligned with the base halves",
                i
            )));
        }
        require_ok(verify_blocking_system(&piece.design, psys)?, "per_group system invalid")?;
        blocks.extend(piece.design.blocks.iter().cloned());
    }
    let (ld, lsys) = last;
    let mut expected: BTreeSet<Label> = last_group.clone();
    expected.extend(tail.iter().cloned());
    if ld.points != expected {
        return Err(Error::InvalidArgument("last-group design is not on group+tail".into()));
    }
    if ld.lambda != base.design.lambda {
        return Err(Error::InvalidArgument("last-group index differs from base index".into()));
    }
    require_ok(verify_bibd(ld)?, "last-group design is not a BIBD")?;
    require_ok(verify_blocking_system(ld, lsys)?, "last-group system invalid")?;
    let covered: BTreeSet<&Label> = lsys.sets.iter().flatten().collect();
    if covered.len() != expected.len() {
        return Err(Error::InvalidArgument("last-group system must partition group+tail".into()));
    }
    let bound1: BTreeSet<Label> = last_group
        .iter()
        .filter(|p| r1.contains(*p))
        .chain(u1.iter())
        .cloned()
        .collect();
    let bound2: BTreeSet<Label> = last_group
        .iter()
        .filter(|p| r2.contains(*p))
        .chain(u2.iter())
        .cloned()
        .collect();
    if lsys.sets.len() < 2
        || !lsys.sets[0].is_subset(&bound1)
        || !lsys.sets[1].is_subset(&bound2)
    {
        return Err(Error::InvalidArgument(
            "last-group system is not aligned with the base halves".into(),
        ));
    }
    blocks.extend(ld.blocks.iter().cloned());
    let points: BTreeSet<Label> =
        base.design.points.iter().chain(tail.iter()).cloned().collect();
    let out = Design::new(points, blocks, base.design.lambda);
    let mut sets: Vec<BTreeSet<Label>> = Vec::new();
    for (i, ls) in lsys.sets.iter().enumerate() {
        let mut s = ls.clone();
        if i < 2 {
            let r = if i == 0 { r1 } else { r2 };
            s.extend(r.iter().filter(|p| !last_group.contains(*p)).cloned());
        }
        sets.push(s);
    }
    let system = BlockingSystem::new(sets);
    require_ok(verify_bibd(&out)?, "assembled design is not a BIBD")?;
    require_ok(verify_blocking_system(&out, &system)?, "assembled system invalid")?;
    Ok((out, system))
}

/// A chain of designs interpolating between a 3-blocked design and one
/// containing a copy of the seed partial design.
#[derive(Debug, Clone)]
pub struct LadderResult {
    pub chain: Vec<Design>,
    /// Valid for the first chain member.
    pub system0: BlockingSystem,
    /// Copy of the seed's blocks inside the last chain member.
    pub embedded_copy: Vec<Vec<Label>>,
    /// The two points through which step i's block changes pass.
    pub swap_points: Vec<(Label, Label)>,
}

fn z_label(pt: &str, level: usize) -> Label {
    format!("({},z{})", pt, level)
}

/// Triple the points of an even-order partial triple system with a matching
/// (or K4-plus-matching) leave, add h extra points, and produce the chain
/// C_0..C_t of (3u+h,3,lambda)-designs: C_0 carries a 3-part blocking system,
/// C_t contains a copy of the seed, and consecutive members differ only in
/// blocks through two designated points.
pub fn ladder_k3(partial: &Design, h: usize, lambda: u64) -> Result<LadderResult> {
    let u = partial.v();
    if u % 2 != 0 || u < 4 {
        return Err(Error::InvalidArgument("seed order must be even and at least 4".into()));
    }
    if h > 5 {
        return Err(Error::InvalidArgument("h must be in 0..=5".into()));
    }
    if lambda == 0 || (h % 2 == 0 && lambda % 2 != 0) {
        return Err(Error::InvalidArgument(
            "index must be positive and even when h is even".into(),
        ));
    }
    let v = 3 * u as u64 + h as u64;
    if !is_admissible(v, 3, lambda) {
        return Err(Error::InvalidArgument(format!("({},3,{}) is inadmissible", v, lambda)));
    }
    if partial.lambda != 1 {
        return Err(Error::InvalidArgument("seed must have index 1".into()));
    }

    // the exceptional set P*: a leave-matching pair, or the K4 vertices
    let leave = crate::verify::leave_graph(partial)?;
    let (p_star, matching_pairs): (Vec<Label>, Vec<(Label, Label)>) =
        if verify_leave_shape(partial, LeaveShape::PerfectMatching)?.ok {
            let mut edges: Vec<(Label, Label)> = leave.edges.iter().cloned().collect();
            edges.sort();
            let star = edges[0].clone();
            let rest = edges[1..].to_vec();
            (vec![star.0, star.1], rest)
        } else if verify_leave_shape(partial, LeaveShape::K4PlusMatching)?.ok {
            let mut deg: BTreeMap<&Label, usize> = BTreeMap::new();
            for (a, b) in &leave.edges {
                *deg.entry(a).or_insert(0) += 1;
                *deg.entry(b).or_insert(0) += 1;
            }
            let clique: Vec<Label> =
                deg.iter().filter(|&(_, &d)| d == 3).map(|(p, _)| (*p).clone()).collect();
            let rest: Vec<(Label, Label)> = leave
                .edges
                .iter()
                .filter(|(a, b)| !clique.contains(a) && !clique.contains(b))
                .cloned()
                .collect();
            (clique, rest)
        } else {
            return Err(Error::InvalidArgument(
                "seed leave is neither a perfect matching nor K4 plus a matching".into(),
            ));
        };

    let h_labels: Vec<Label> = (1..=h).map(|i| format!("h{}", i)).collect();
    // the h-piece template fixes how the extra points split across the sets
    let (gdd_piece, gdd_sys) = gdd_h_1_6(h, lambda)?;
    let h_group: BTreeSet<Label> = if h == 0 {
        BTreeSet::new()
    } else if h == 1 {
        gdd_piece.groups[0].clone()
    } else {
        gdd_piece
            .groups
            .iter()
            .find(|g| g.len() == h)
            .cloned()
            .ok_or_else(|| Error::PreconditionViolation("h-group missing".into()))?
    };
    let h_sorted: Vec<&Label> = h_group.iter().collect();
    let phi_h: BTreeMap<&Label, &Label> =
        h_sorted.iter().copied().zip(h_labels.iter()).collect();
    let mut h_parts: Vec<BTreeSet<Label>> = Vec::new();
    let mut outer_parts: Vec<Vec<&Label>> = Vec::new();
    for set in &gdd_sys.sets {
        let inside: BTreeSet<Label> = set
            .iter()
            .filter(|p| h_group.contains(*p))
            .map(|p| phi_h[p].clone())
            .collect();
        let outside: Vec<&Label> = set.iter().filter(|p| !h_group.contains(*p)).collect();
        if outside.len() != 2 {
            return Err(Error::PreconditionViolation(
                "h-piece system must hold exactly two singleton points per set".into(),
            ));
        }
        h_parts.push(inside);
        outer_parts.push(outside);
    }

    let mut points: Vec<Label> = h_labels.clone();
    for pt in &partial.points {
        for lvl in 1..=3 {
            points.push(z_label(pt, lvl));
        }
    }

    // h-piece per matching pair
    let mut fixed_blocks: Vec<Vec<Label>> = Vec::new();
    for (a, b) in &matching_pairs {
        let mut map: BTreeMap<&Label, Label> = BTreeMap::new();
        for (i, outside) in outer_parts.iter().enumerate() {
            map.insert(outside[0], z_label(a, i + 1));
            map.insert(outside[1], z_label(b, i + 1));
        }
        for p in &h_group {
            map.insert(p, phi_h[p].clone());
        }
        for blk in &gdd_piece.design.blocks {
            fixed_blocks.push(blk.iter().map(|p| map[p].clone()).collect());
        }
    }

    // the exceptional piece: a full design on P* x levels plus the extras
    let w = 3 * p_star.len() as u64 + h as u64;
    let (star_design, star_sys) = bibd_3_blocked(w, lambda)?;
    {
        let mut used: Vec<usize> = Vec::new();
        let mut source_order: Vec<usize> = Vec::new();
        for i in 0..3 {
            let want = p_star.len() + h_parts[i].len();
            let j = (0..3)
                .find(|j| !used.contains(j) && star_sys.sets[*j].len() == want)
                .ok_or_else(|| {
                    Error::UnsupportedSize("no set-size alignment for the exceptional piece".into())
                })?;
            used.push(j);
            source_order.push(j);
        }
        let mut map: BTreeMap<&Label, Label> = BTreeMap::new();
        let mut star_sorted = p_star.clone();
        star_sorted.sort();
        for (i, &j) in source_order.iter().enumerate() {
            let mut targets: Vec<Label> =
                star_sorted.iter().map(|q| z_label(q, i + 1)).collect();
            targets.extend(h_parts[i].iter().cloned());
            for (src, dst) in star_sys.sets[j].iter().zip(targets) {
                map.insert(src, dst);
            }
        }
        for blk in &star_design.blocks {
            fixed_blocks.push(blk.iter().map(|p| map[p].clone()).collect());
        }
    }

    // per seed block: the two TDs on block x levels, scaled to the index
    let pair = td_3_3_pair();
    let mut per_block_base: Vec<Vec<Vec<Label>>> = Vec::new();
    let mut per_block_twisted: Vec<Vec<Vec<Label>>> = Vec::new();
    let mut swaps: Vec<(Label, Label)> = Vec::new();
    for a in &partial.blocks {
        let mut map: BTreeMap<Label, Label> = BTreeMap::new();
        for x in 0..3u64 {
            for y in 0..3u64 {
                map.insert(
                    crate::construct::pair_label(x, y),
                    z_label(&a[x as usize], (y + 1) as usize),
                );
            }
        }
        let relabel = |blocks: &Vec<Vec<Label>>| -> Vec<Vec<Label>> {
            let mut out = Vec::new();
            for blk in blocks {
                let image: Vec<Label> = blk.iter().map(|p| map[p].clone()).collect();
                for _ in 0..lambda {
                    out.push(image.clone());
                }
            }
            out
        };
        per_block_base.push(relabel(&pair.base.design.blocks));
        per_block_twisted.push(relabel(&pair.twisted.design.blocks));
        swaps.push((map[&pair.swap_points.0].clone(), map[&pair.swap_points.1].clone()));
    }

    let t = partial.blocks.len();
    let mut chain: Vec<Design> = Vec::with_capacity(t + 1);
    for k in 0..=t {
        let mut blocks = fixed_blocks.clone();
        for (i, _) in partial.blocks.iter().enumerate() {
            let src = if i < k { &per_block_twisted[i] } else { &per_block_base[i] };
            blocks.extend(src.iter().cloned());
        }
        chain.push(Design::new(points.iter().cloned(), blocks, lambda));
    }

    let mut sets: Vec<BTreeSet<Label>> = Vec::new();
    for i in 0..3 {
        let mut s: BTreeSet<Label> =
            partial.points.iter().map(|p| z_label(p, i + 1)).collect();
        s.extend(h_parts[i].iter().cloned());
        sets.push(s);
    }
    let embedded_copy: Vec<Vec<Label>> = partial
        .blocks
        .iter()
        .map(|a| {
            let mut b: Vec<Label> = a.iter().map(|p| z_label(p, 1)).collect();
            b.sort();
            b
        })
        .collect();
    Ok(LadderResult {
        chain,
        system0: BlockingSystem::new(sets),
        embedded_copy,
        swap_points: swaps,
    })
}

/// Exact chromatic number of every chain member; when consecutive members
/// differ only in blocks through two common points, the values may differ by
/// at most one, and this is asserted.
pub fn chromatic_step_scan(chain: &[Design], cfg: &SolverConfig) -> Result<Vec<u32>> {
    if chain.is_empty() {
        return Err(Error::InvalidArgument("empty chain".into()));
    }
    if chain.iter().any(|d| d.points != chain[0].points) {
        return Err(Error::InvalidArgument("chain members use different point sets".into()));
    }
    let mut chis = Vec::with_capacity(chain.len());
    for d in chain {
        let cert = exact_chromatic(d, cfg).map_err(|e| match e {
            Error::ResourceExhausted(m) => Error::UnsupportedSize(m),
            e => e,
        })?;
        chis.push(cert.chi);
    }
    for i in 0..chain.len() - 1 {
        if two_point_difference(&chain[i], &chain[i + 1]).is_some() {
            let (a, b) = (chis[i], chis[i + 1]);
            assert!(
                a.abs_diff(b) <= 1,
                "chromatic numbers {} and {} differ by more than 1 across a two-point step",
                a,
                b
            );
        }
    }
    Ok(chis)
}

/// If every block in the multiset symmetric difference of the two designs
/// contains one of two common points, return such a pair.
pub fn two_point_difference(d1: &Design, d2: &Design) -> Option<(Label, Label)> {
    let mut count: BTreeMap<&Vec<Label>, i64> = BTreeMap::new();
    for b in &d1.blocks {
        *count.entry(b).or_insert(0) += 1;
    }
    for b in &d2.blocks {
        *count.entry(b).or_insert(0) -= 1;
    }
    let diff: Vec<&Vec<Label>> = count.iter().filter(|&(_, &n)| n != 0).map(|(b, _)| *b).collect();
    if diff.is_empty() {
        let p = d1.points.iter().next()?;
        return Some((p.clone(), p.clone()));
    }
    for x in diff[0] {
        let missing: Vec<&&Vec<Label>> = diff.iter().filter(|b| !b.contains(x)).collect();
        match missing.first() {
            None => return Some((x.clone(), x.clone())),
            Some(first) => {
                for y in first.iter() {
                    if missing.iter().all(|b| b.contains(y)) {
                        return Some((x.clone(), y.clone()));
                    }
                }
            }
        }
    }
    None
}

//! Command-line front end: construct, verify, colour, search, compose and
//! catalogue block-design documents as canonical JSON files.
//!
//! Exit codes: 0 ok, 1 negative-but-proven, 2 invalid arguments, 3 I/O or
//! parse, 4 resource-exhausted, 5 integrity failure.

mod doc;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};

use blockdesign::colour::{
    exact_chromatic, find_blocking_system, find_blocking_system_constrained, greedy_colouring,
    SolverConfig,
};
use blockdesign::compose::{
    chromatic_step_scan, common_tail_fill, fill_groups, ladder_k3, product_construction,
    wilson_inflate, FillSpec, TdSource,
};
use blockdesign::construct::{fixture, gdd_h_1_6, td_3_3_pair, td_4_13, td_lines, bibd_3_blocked};
use blockdesign::design::GroupType;
use blockdesign::lattice::{
    allowability_check, averaged_type, check_delta_positivity, enumerate_family,
    minimal_uniform_scalar, mu_of, subfamily, subfamily_closed_type, FamilyVariant,
};
use blockdesign::verify::{
    verify_bibd, verify_blocking_system, verify_colouring, verify_gdd, verify_leave_shape,
    verify_partial_bibd, verify_td, LeaveShape, Verdict,
};
use blockdesign::{BlockingSystem, Colouring, Design, Error as LibError, GroupedDesign};
use num_bigint::BigInt;

use doc::{
    document_from_design, read_colouring, read_document, read_manifest, sha256_hex,
    write_colouring, write_document, write_manifest, CatalogueEntry, CatalogueManifest,
    ColouringDocument, DesignDocument, Parameters, FORMAT_VERSION,
};

struct Failure {
    code: u8,
    msg: String,
}

type CmdResult = Result<(), Failure>;

fn fail(code: u8, msg: impl Into<String>) -> Failure {
    Failure { code, msg: msg.into() }
}

fn lib_fail(e: LibError) -> Failure {
    let code = match &e {
        LibError::NotFound(_) => 1,
        LibError::ResourceExhausted(_) => 4,
        _ => 2,
    };
    Failure { code, msg: e.to_string() }
}

fn io_fail(e: anyhow::Error) -> Failure {
    Failure { code: 3, msg: format!("{:#}", e) }
}

#[derive(Parser)]
#[command(name = "blockdesign", version, about = "Construct, verify, compose and colour block designs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a design from one of the shipped constructions
    Construct {
        #[command(subcommand)]
        target: ConstructTarget,
    },
    /// Check a stored document against one of the verifiers
    Verify(VerifyArgs),
    /// Exact or greedy weak colouring
    Colour(ColourArgs),
    /// Search for a blocking system with given set sizes
    SearchBlocking(SearchArgs),
    /// Assemble larger designs from verified ingredient files
    Compose {
        #[command(subcommand)]
        op: ComposeCmd,
    },
    /// Exact integer/rational computations on block-type vectors
    Lattice {
        #[command(subcommand)]
        op: LatticeCmd,
    },
    /// Manage an on-disk catalogue of verified designs
    Catalogue {
        #[command(subcommand)]
        op: CatalogueCmd,
    },
}

#[derive(Subcommand)]
enum ConstructTarget {
    /// Transversal design from lines over Z_k x Z_p, with its two systems
    TdLines {
        #[arg(long)]
        k: u64,
        #[arg(long)]
        p: u64,
        #[arg(long)]
        require_mod4: bool,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// The stored TD(4,13) with its stored S- and T-systems
    #[command(name = "td-4-13")]
    Td413 {
        #[arg(short, long)]
        output: PathBuf,
    },
    /// The twisted pair of TD(3,3)s sharing all but two points' blocks
    #[command(name = "td-3-3-pair")]
    Td33Pair {
        /// Base member of the pair
        #[arg(short, long)]
        output: PathBuf,
        /// Optional file for the twisted member
        #[arg(long)]
        twisted_out: Option<PathBuf>,
    },
    /// Group-divisible design of type h^1 1^6 from the stored tables
    GddH16 {
        #[arg(long)]
        h: usize,
        #[arg(long)]
        lambda: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Triple system with a balanced 3-part blocking system
    Bibd3 {
        #[arg(long)]
        w: u64,
        #[arg(long)]
        lambda: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// A named fixture from the built-in collection
    Fixture {
        #[arg(long)]
        name: String,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Single-block design on the listed points (ingredient helper)
    Trivial {
        /// Comma-separated point labels
        #[arg(long)]
        points: String,
        #[arg(long, default_value_t = 1)]
        lambda: u64,
        /// Blocking system as semicolon-separated comma-lists, e.g. "a,b;c,d"
        #[arg(long)]
        system: Option<String>,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(clap::Args)]
struct VerifyArgs {
    file: PathBuf,
    /// bibd | partial-bibd | gdd | td | blocking | colouring | leave-shape
    #[arg(long = "as", value_name = "CLASS")]
    class: String,
    /// Blocking-system name to check (default: every stored system)
    #[arg(long)]
    system: Option<String>,
    /// Colouring document, for --as colouring
    #[arg(long)]
    colouring: Option<PathBuf>,
    /// matching | k4-matching, for --as leave-shape
    #[arg(long)]
    shape: Option<String>,
}

#[derive(clap::Args)]
struct ColourArgs {
    file: PathBuf,
    #[arg(long, conflicts_with = "greedy")]
    exact: bool,
    #[arg(long)]
    greedy: bool,
    /// Number of colours (required for --greedy)
    #[arg(long)]
    c: Option<u32>,
    #[arg(long, default_value_t = 64)]
    point_cap: usize,
    #[arg(long, default_value_t = 600)]
    budget_secs: u64,
    /// Write the found colouring here
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(clap::Args)]
struct SearchArgs {
    file: PathBuf,
    /// Comma-separated set sizes, e.g. 16,16,16
    #[arg(long)]
    sizes: String,
    /// Uniform per-set-per-group intersection quota (grouped documents only)
    #[arg(long)]
    quota: Option<usize>,
    /// Index of a block to puncture out of the search
    #[arg(long)]
    exclude_block: Option<usize>,
    #[arg(long, default_value_t = 600)]
    budget_secs: u64,
    /// Name under which the found system is stored
    #[arg(long, default_value = "found")]
    name: String,
    /// Output file (default: rewrite the input document)
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ComposeCmd {
    /// Fill every group of a GDD with a design carried in a filler file
    Fill {
        #[arg(long)]
        base: PathBuf,
        /// Name of the base document's system to thread through
        #[arg(long)]
        base_system: Option<String>,
        /// Share one extra point across all fillers
        #[arg(long)]
        infinity: bool,
        /// Repeatable IDX=FILE pairs: filler design for group IDX
        #[arg(long = "filler", value_name = "IDX=FILE")]
        fillers: Vec<String>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Replace each point by `weight` copies and each block by an ingredient
    Inflate {
        #[arg(long)]
        master: PathBuf,
        #[arg(long)]
        weight: usize,
        /// Repeatable SIZE=FILE pairs: ingredient for blocks of size SIZE
        #[arg(long = "ingredient", value_name = "SIZE=FILE")]
        ingredients: Vec<String>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Point-by-level product of an outer design with a transversal design
    Product {
        #[arg(long)]
        outer: PathBuf,
        #[arg(long)]
        outer_system: String,
        /// Comma-separated indices of the outer blocks to mark
        #[arg(long)]
        marked: String,
        /// lines | pair
        #[arg(long)]
        source: String,
        /// Block size for --source lines
        #[arg(long)]
        k: Option<u64>,
        /// Prime order for --source lines
        #[arg(long)]
        p: Option<u64>,
        /// Column design file (carrying a blocking system)
        #[arg(long)]
        column: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Glue a GDD with piece designs sharing a common tail
    CommonTail {
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        base_system: String,
        /// Comma-separated tail point labels
        #[arg(long)]
        tail: String,
        /// First tail half (comma-separated labels)
        #[arg(long)]
        u1: String,
        /// Second tail half (comma-separated labels)
        #[arg(long)]
        u2: String,
        /// Repeatable IDX=FILE pairs: grouped piece for ordinary group IDX
        #[arg(long = "piece", value_name = "IDX=FILE")]
        pieces: Vec<String>,
        /// Design covering the last group plus the tail
        #[arg(long)]
        last: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Chain of triple systems interpolating towards an embedded seed
    Ladder {
        #[arg(long)]
        partial: PathBuf,
        #[arg(long)]
        h: usize,
        #[arg(long)]
        lambda: u64,
        /// Run the exact chromatic scan over the chain and print it
        #[arg(long)]
        scan: bool,
        /// Chain files are written as PREFIX0.json, PREFIX1.json, ...
        #[arg(short, long, value_name = "PREFIX")]
        output: String,
    },
}

#[derive(Subcommand)]
enum LatticeCmd {
    /// Least multiplier putting the uniform vector in the single-clique
    /// degree-profile lattice
    Alpha {
        #[arg(long)]
        k: i64,
    },
    /// Least multiplier for the single-clique pair-count lattice
    Beta {
        #[arg(long)]
        k: i64,
    },
    /// Positive rational combination of family pair-count vectors hitting 1
    Allowable {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        g: usize,
        /// both-sides | one-three
        #[arg(long, default_value = "both-sides")]
        variant: String,
    },
    /// Averaged type tuple of a named subfamily vs its closed form
    Typevec {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        l: usize,
        /// a | b | c | d | e
        #[arg(long)]
        family: char,
    },
    /// Sign report for the two margin quantities at (k, l)
    Delta {
        #[arg(long)]
        k: u64,
        #[arg(long)]
        l: u64,
    },
}

#[derive(Subcommand)]
enum CatalogueCmd {
    /// Create an empty catalogue directory with a manifest
    Init {
        #[arg(long)]
        dir: Option<PathBuf>,
    },
    /// Verify a document and store it under a name
    Add {
        #[arg(long)]
        name: String,
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        dir: Option<PathBuf>,
    },
    /// Print the manifest as a table
    List {
        #[arg(long)]
        dir: Option<PathBuf>,
    },
    /// Re-verify every entry against its digest and verifier
    Check {
        #[arg(long)]
        dir: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> CmdResult {
    match cli.cmd {
        Cmd::Construct { target } => cmd_construct(target),
        Cmd::Verify(a) => cmd_verify(a),
        Cmd::Colour(a) => cmd_colour(a),
        Cmd::SearchBlocking(a) => cmd_search_blocking(a),
        Cmd::Compose { op } => cmd_compose(op),
        Cmd::Lattice { op } => cmd_lattice(op),
        Cmd::Catalogue { op } => cmd_catalogue(op),
    }
}

// ---------------------------------------------------------------- helpers

fn parse_labels(s: &str) -> Vec<String> {
    s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect()
}

fn parse_system_spec(s: &str) -> BlockingSystem {
    BlockingSystem::new(
        s.split(';').map(|set| parse_labels(set).into_iter().collect()).collect(),
    )
}

fn parse_indexed(args: &[String]) -> Result<Vec<(usize, PathBuf)>, Failure> {
    args.iter()
        .map(|a| {
            let (idx, file) = a
                .split_once('=')
                .ok_or_else(|| fail(2, format!("expected IDX=FILE, got '{}'", a)))?;
            let idx: usize =
                idx.parse().map_err(|_| fail(2, format!("bad index '{}'", idx)))?;
            Ok((idx, PathBuf::from(file)))
        })
        .collect()
}

fn parse_sizes(s: &str) -> Result<Vec<usize>, Failure> {
    s.split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|_| fail(2, format!("bad size '{}'", x))))
        .collect()
}

fn solver_cfg(point_cap: usize, budget_secs: u64) -> SolverConfig {
    SolverConfig {
        point_cap,
        time_budget: Duration::from_secs(budget_secs),
        ..SolverConfig::default()
    }
}

fn read_doc(path: &Path) -> Result<DesignDocument, Failure> {
    read_document(path).map_err(io_fail)
}

fn write_doc(path: &Path, doc: &mut DesignDocument) -> CmdResult {
    write_document(path, doc).map_err(io_fail)
}

fn require_verdict(v: Verdict, what: &str) -> CmdResult {
    if v.ok {
        Ok(())
    } else {
        Err(fail(2, format!("{}: {}", what, v.witness.unwrap_or_default())))
    }
}

fn report_verdict(v: Verdict) -> CmdResult {
    if v.ok {
        println!("OK");
        Ok(())
    } else {
        Err(fail(1, v.witness.unwrap_or_else(|| "verification failed".into())))
    }
}

/// Run the verifier matching the document's own kind on its design part.
fn verify_as_kind(doc: &DesignDocument) -> Result<Verdict, Failure> {
    let v = match doc.kind.as_str() {
        "bibd" => verify_bibd(&doc.to_design()),
        "partial_bibd" => verify_partial_bibd(&doc.to_design()),
        "gdd" => verify_gdd(&doc.to_grouped().map_err(io_fail)?),
        "td" => verify_td(&doc.to_grouped().map_err(io_fail)?),
        other => return Err(fail(2, format!("unknown kind '{}'", other))),
    };
    v.map_err(lib_fail)
}

fn group_sets(groups: &[BTreeSet<String>]) -> Vec<BTreeSet<String>> {
    groups.to_vec()
}

fn doc_with_groups(
    kind: &str,
    g: &GroupedDesign,
    provenance: &str,
) -> DesignDocument {
    document_from_design(kind, &g.design, Some(&group_sets(&g.groups)), provenance)
}

// -------------------------------------------------------------- construct

fn cmd_construct(target: ConstructTarget) -> CmdResult {
    match target {
        ConstructTarget::TdLines { k, p, require_mod4, output } => {
            let t = td_lines(k, p, require_mod4).map_err(lib_fail)?;
            let prov = format!(
                "construct td-lines --k {} --p {}{}",
                k,
                p,
                if require_mod4 { " --require-mod4" } else { "" }
            );
            let mut doc = doc_with_groups("td", &t.td, &prov);
            doc.attach_system("whole", &t.whole_system);
            doc.attach_system("punctured", &t.punctured_system);
            doc.provenance = format!(
                "{}; special block: {}",
                prov,
                t.special_block.join(",")
            );
            println!("td({},{}): {} blocks", k, p, t.td.design.blocks.len());
            write_doc(&output, &mut doc)
        }
        ConstructTarget::Td413 { output } => {
            let t = td_4_13();
            let mut doc = doc_with_groups("td", &t.td, "construct td-4-13");
            doc.attach_system("whole", &t.whole_system);
            doc.attach_system("punctured", &t.punctured_system);
            doc.provenance =
                format!("construct td-4-13; special block: {}", t.special_block.join(","));
            println!("td(4,13): {} blocks", t.td.design.blocks.len());
            write_doc(&output, &mut doc)
        }
        ConstructTarget::Td33Pair { output, twisted_out } => {
            let t = td_3_3_pair();
            let mut base = doc_with_groups(
                "td",
                &t.base,
                &format!(
                    "construct td-3-3-pair (base); swap points: {},{}",
                    t.swap_points.0, t.swap_points.1
                ),
            );
            base.attach_system("partition", &t.partition_system);
            write_doc(&output, &mut base)?;
            if let Some(tw) = twisted_out {
                let mut twisted = doc_with_groups(
                    "td",
                    &t.twisted,
                    "construct td-3-3-pair (twisted)",
                );
                write_doc(&tw, &mut twisted)?;
            }
            println!("td(3,3) pair: {} blocks each", t.base.design.blocks.len());
            Ok(())
        }
        ConstructTarget::GddH16 { h, lambda, output } => {
            let (g, bs) = gdd_h_1_6(h, lambda).map_err(lib_fail)?;
            let prov = format!("construct gdd-h16 --h {} --lambda {}", h, lambda);
            let mut doc = doc_with_groups("gdd", &g, &prov);
            doc.attach_system("blocking", &bs);
            println!("gdd {}^1 1^6: {} blocks", h, g.design.blocks.len());
            write_doc(&output, &mut doc)
        }
        ConstructTarget::Bibd3 { w, lambda, output } => {
            let (d, bs) = bibd_3_blocked(w, lambda).map_err(lib_fail)?;
            let prov = format!("construct bibd3 --w {} --lambda {}", w, lambda);
            let mut doc = document_from_design("bibd", &d, None, &prov);
            doc.attach_system("blocking", &bs);
            println!("({},3,{}): {} blocks", w, lambda, d.blocks.len());
            write_doc(&output, &mut doc)
        }
        ConstructTarget::Fixture { name, output } => {
            let f = fixture(&name).map_err(lib_fail)?;
            let kind = match &f.groups {
                Some(gs) => {
                    let g = GroupedDesign { design: f.design.clone(), groups: gs.clone() };
                    if verify_td(&g).map_err(lib_fail)?.ok { "td" } else { "gdd" }
                }
                None => {
                    if verify_bibd(&f.design).map_err(lib_fail)?.ok {
                        "bibd"
                    } else {
                        "partial_bibd"
                    }
                }
            };
            let prov = format!("construct fixture --name {}", name);
            let mut doc =
                document_from_design(kind, &f.design, f.groups.as_deref(), &prov);
            if let Some(bs) = &f.system {
                doc.attach_system("blocking", bs);
            }
            println!("fixture {}: {} points, {} blocks", name, f.design.v(), f.design.blocks.len());
            write_doc(&output, &mut doc)
        }
        ConstructTarget::Trivial { points, lambda, system, output } => {
            let pts = parse_labels(&points);
            if pts.len() < 2 {
                return Err(fail(2, "need at least two points"));
            }
            let d = Design::new(pts.iter().cloned(), vec![pts.clone()], lambda);
            let mut prov = format!("construct trivial --points {} --lambda {}", points, lambda);
            let mut doc = document_from_design("bibd", &d, None, &prov);
            if let Some(spec) = &system {
                let bs = parse_system_spec(spec);
                require_verdict(
                    verify_blocking_system(&d, &bs).map_err(lib_fail)?,
                    "system does not block the trivial design",
                )?;
                doc.attach_system("blocking", &bs);
                prov.push_str(&format!(" --system {}", spec));
                doc.provenance = prov;
            }
            write_doc(&output, &mut doc)
        }
    }
}

// ----------------------------------------------------------------- verify

fn cmd_verify(a: VerifyArgs) -> CmdResult {
    let doc = read_doc(&a.file)?;
    match a.class.as_str() {
        "bibd" => report_verdict(verify_bibd(&doc.to_design()).map_err(lib_fail)?),
        "partial-bibd" => {
            report_verdict(verify_partial_bibd(&doc.to_design()).map_err(lib_fail)?)
        }
        "gdd" => report_verdict(verify_gdd(&doc.to_grouped().map_err(io_fail)?).map_err(lib_fail)?),
        "td" => report_verdict(verify_td(&doc.to_grouped().map_err(io_fail)?).map_err(lib_fail)?),
        "blocking" => {
            let d = doc.to_design();
            let names: Vec<String> = match &a.system {
                Some(n) => vec![n.clone()],
                None => doc
                    .blocking_systems
                    .as_ref()
                    .map(|m| m.keys().cloned().collect())
                    .unwrap_or_default(),
            };
            if names.is_empty() {
                return Err(fail(2, "document carries no blocking system"));
            }
            for n in names {
                let bs = doc.system(&n).map_err(io_fail)?;
                let v = verify_blocking_system(&d, &bs).map_err(lib_fail)?;
                if !v.ok {
                    return Err(fail(
                        1,
                        format!("system '{}': {}", n, v.witness.unwrap_or_default()),
                    ));
                }
                println!("system '{}': OK", n);
            }
            Ok(())
        }
        "colouring" => {
            let col_path =
                a.colouring.as_ref().ok_or_else(|| fail(2, "--colouring FILE required"))?;
            let cd = read_colouring(col_path).map_err(io_fail)?;
            let col = Colouring { assignment: cd.assignment, c: cd.c };
            report_verdict(verify_colouring(&doc.to_design(), &col).map_err(lib_fail)?)
        }
        "leave-shape" => {
            let shape = match a.shape.as_deref() {
                Some("matching") => LeaveShape::PerfectMatching,
                Some("k4-matching") => LeaveShape::K4PlusMatching,
                _ => return Err(fail(2, "--shape matching|k4-matching required")),
            };
            report_verdict(verify_leave_shape(&doc.to_design(), shape).map_err(lib_fail)?)
        }
        other => Err(fail(2, format!("unknown class '{}'", other))),
    }
}

// ----------------------------------------------------------------- colour

fn cmd_colour(a: ColourArgs) -> CmdResult {
    let doc = read_doc(&a.file)?;
    let d = doc.to_design();
    let cfg = solver_cfg(a.point_cap, a.budget_secs);
    if a.exact {
        let cert = exact_chromatic(&d, &cfg).map_err(|e| match e {
            LibError::ResourceExhausted(m) | LibError::UnsupportedSize(m) => {
                // report a greedy upper bound alongside the failure
                let ub = (2..=d.v() as u32)
                    .find(|&c| greedy_colouring(&d, c).is_some());
                fail(
                    4,
                    match ub {
                        Some(c) => format!("{} (greedy upper bound: {})", m, c),
                        None => m,
                    },
                )
            }
            e => lib_fail(e),
        })?;
        println!("chi = {}", cert.chi);
        if let Some(out) = &a.output {
            let cd = ColouringDocument {
                format_version: FORMAT_VERSION,
                c: cert.colouring.c,
                assignment: cert.colouring.assignment.clone(),
                provenance: format!("colour --exact {}", a.file.display()),
            };
            write_colouring(out, &cd).map_err(io_fail)?;
        }
        Ok(())
    } else if a.greedy {
        let c = a.c.ok_or_else(|| fail(2, "--c required with --greedy"))?;
        match greedy_colouring(&d, c) {
            Some(col) => {
                println!("found a {}-colouring", c);
                for (p, v) in &col.assignment {
                    println!("{} {}", p, v);
                }
                if let Some(out) = &a.output {
                    let cd = ColouringDocument {
                        format_version: FORMAT_VERSION,
                        c: col.c,
                        assignment: col.assignment.clone(),
                        provenance: format!(
                            "colour --greedy --c {} {}",
                            c,
                            a.file.display()
                        ),
                    };
                    write_colouring(out, &cd).map_err(io_fail)?;
                }
                Ok(())
            }
            None => Err(fail(1, format!("no greedy {}-colouring found", c))),
        }
    } else {
        Err(fail(2, "one of --exact or --greedy required"))
    }
}

// -------------------------------------------------------- search-blocking

fn cmd_search_blocking(a: SearchArgs) -> CmdResult {
    let mut doc = read_doc(&a.file)?;
    let sizes = parse_sizes(&a.sizes)?;
    let cfg = solver_cfg(usize::MAX, a.budget_secs);
    let found = if a.quota.is_some() || a.exclude_block.is_some() {
        let g = doc
            .to_grouped()
            .map_err(|_| fail(2, "--quota/--exclude-block need a grouped document"))?;
        let exclude: Option<Vec<String>> = match a.exclude_block {
            Some(i) => Some(
                doc.blocks
                    .get(i)
                    .cloned()
                    .ok_or_else(|| fail(2, format!("no block with index {}", i)))?,
            ),
            None => None,
        };
        find_blocking_system_constrained(&g, &sizes, a.quota, exclude.as_deref(), &cfg)
            .map_err(lib_fail)?
    } else {
        find_blocking_system(&doc.to_design(), &sizes, &cfg).map_err(lib_fail)?
    };
    match found {
        Some(bs) => {
            println!("found system with sizes {:?}", bs.sizes());
            doc.attach_system(&a.name, &bs);
            let out = a.output.as_deref().unwrap_or(&a.file);
            write_doc(out, &mut doc)
        }
        None => Err(fail(1, "no such blocking system exists (search space exhausted)")),
    }
}

// ---------------------------------------------------------------- compose

fn read_design_with_system(
    path: &Path,
    system: Option<&str>,
) -> Result<(Design, BlockingSystem), Failure> {
    let doc = read_doc(path)?;
    let bs = match system {
        Some(n) => doc.system(n).map_err(io_fail)?,
        None => doc.first_system().map_err(|e| fail(2, format!("{:#}", e)))?.1,
    };
    Ok((doc.to_design(), bs))
}

fn read_grouped_with_system(
    path: &Path,
    system: Option<&str>,
) -> Result<(GroupedDesign, BlockingSystem), Failure> {
    let doc = read_doc(path)?;
    let g = doc.to_grouped().map_err(|e| fail(2, format!("{:#}", e)))?;
    let bs = match system {
        Some(n) => doc.system(n).map_err(io_fail)?,
        None => doc.first_system().map_err(|e| fail(2, format!("{:#}", e)))?.1,
    };
    Ok((g, bs))
}

fn cmd_compose(op: ComposeCmd) -> CmdResult {
    match op {
        ComposeCmd::Fill { base, base_system, infinity, fillers, output } => {
            let base_doc = read_doc(&base)?;
            let g = base_doc.to_grouped().map_err(|e| fail(2, format!("{:#}", e)))?;
            let base_bs = match &base_system {
                Some(n) => Some(base_doc.system(n).map_err(io_fail)?),
                None => None,
            };
            let mut fill_map = BTreeMap::new();
            for (idx, file) in parse_indexed(&fillers)? {
                let (d, bs) = read_design_with_system(&file, None)?;
                fill_map.insert(idx, (d, bs));
            }
            let spec = FillSpec {
                base: g,
                fillers: fill_map,
                add_infinity: infinity,
                base_system: base_bs,
            };
            let (d, bs) = fill_groups(&spec).map_err(lib_fail)?;
            require_verdict(verify_bibd(&d).map_err(lib_fail)?, "assembled design invalid")?;
            require_verdict(
                verify_blocking_system(&d, &bs).map_err(lib_fail)?,
                "assembled system invalid",
            )?;
            let prov = format!(
                "compose fill --base {}{}",
                base.display(),
                if infinity { " --infinity" } else { "" }
            );
            let mut doc = document_from_design("bibd", &d, None, &prov);
            doc.attach_system("filled", &bs);
            println!("filled design: {} points, {} blocks", d.v(), d.blocks.len());
            write_doc(&output, &mut doc)
        }
        ComposeCmd::Inflate { master, weight, ingredients, output } => {
            let master_doc = read_doc(&master)?;
            let m = master_doc.to_grouped().map_err(|e| fail(2, format!("{:#}", e)))?;
            let mut ing = BTreeMap::new();
            for (size, file) in parse_indexed(&ingredients)? {
                let (g, bs) = read_grouped_with_system(&file, None)?;
                ing.insert(size, (g, bs));
            }
            let (out, bs) = wilson_inflate(&m, weight, &ing).map_err(lib_fail)?;
            require_verdict(verify_gdd(&out).map_err(lib_fail)?, "assembled design invalid")?;
            require_verdict(
                verify_blocking_system(&out.design, &bs).map_err(lib_fail)?,
                "assembled system invalid",
            )?;
            let prov = format!(
                "compose inflate --master {} --weight {}",
                master.display(),
                weight
            );
            let mut doc = doc_with_groups("gdd", &out, &prov);
            doc.attach_system("inflated", &bs);
            println!(
                "inflated design: {} points, {} blocks",
                out.design.v(),
                out.design.blocks.len()
            );
            write_doc(&output, &mut doc)
        }
        ComposeCmd::Product { outer, outer_system, marked, source, k, p, column, output } => {
            let outer_doc = read_doc(&outer)?;
            let outer_d = outer_doc.to_design();
            let outer_bs = outer_doc.system(&outer_system).map_err(io_fail)?;
            let marked_idx: Vec<usize> = marked
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.trim().parse::<usize>().map_err(|_| fail(2, format!("bad index '{}'", s))))
                .collect::<Result<_, _>>()?;
            let mut marked_blocks = Vec::new();
            for i in marked_idx {
                marked_blocks.push(
                    outer_doc
                        .blocks
                        .get(i)
                        .cloned()
                        .ok_or_else(|| fail(2, format!("no outer block with index {}", i)))?,
                );
            }
            let src = match source.as_str() {
                "lines" => {
                    let (k, p) = match (k, p) {
                        (Some(k), Some(p)) => (k, p),
                        _ => return Err(fail(2, "--source lines needs --k and --p")),
                    };
                    TdSource::Lines(td_lines(k, p, false).map_err(lib_fail)?)
                }
                "pair" => TdSource::Pair(td_3_3_pair()),
                other => return Err(fail(2, format!("unknown source '{}'", other))),
            };
            let col = read_design_with_system(&column, None)?;
            let res =
                product_construction(&outer_d, &outer_bs, &marked_blocks, &src, &col)
                    .map_err(lib_fail)?;
            require_verdict(
                verify_bibd(&res.design).map_err(lib_fail)?,
                "assembled design invalid",
            )?;
            let prov = format!(
                "compose product --outer {} --source {}; z* level {}; embedded copy of {} blocks",
                outer.display(),
                source,
                res.z_star,
                res.embedded_copy.len()
            );
            let mut doc = document_from_design("bibd", &res.design, None, &prov);
            doc.attach_system("product", &res.system);
            println!(
                "product design: {} points, {} blocks, embedded copy {} blocks",
                res.design.v(),
                res.design.blocks.len(),
                res.embedded_copy.len()
            );
            write_doc(&output, &mut doc)
        }
        ComposeCmd::CommonTail { base, base_system, tail, u1, u2, pieces, last, output } => {
            let base_doc = read_doc(&base)?;
            let g = base_doc.to_grouped().map_err(|e| fail(2, format!("{:#}", e)))?;
            let base_bs = base_doc.system(&base_system).map_err(io_fail)?;
            let tail_set: BTreeSet<String> = parse_labels(&tail).into_iter().collect();
            let u1_set: BTreeSet<String> = parse_labels(&u1).into_iter().collect();
            let u2_set: BTreeSet<String> = parse_labels(&u2).into_iter().collect();
            let mut per_group = BTreeMap::new();
            for (idx, file) in parse_indexed(&pieces)? {
                per_group.insert(idx, read_grouped_with_system(&file, None)?);
            }
            let last_pair = read_design_with_system(&last, None)?;
            let (d, bs) = common_tail_fill(
                &g,
                &base_bs,
                &tail_set,
                (&u1_set, &u2_set),
                &per_group,
                &last_pair,
            )
            .map_err(lib_fail)?;
            require_verdict(verify_bibd(&d).map_err(lib_fail)?, "assembled design invalid")?;
            let prov = format!("compose common-tail --base {}", base.display());
            let mut doc = document_from_design("bibd", &d, None, &prov);
            doc.attach_system("assembled", &bs);
            println!("assembled design: {} points, {} blocks", d.v(), d.blocks.len());
            write_doc(&output, &mut doc)
        }
        ComposeCmd::Ladder { partial, h, lambda, scan, output } => {
            let seed_doc = read_doc(&partial)?;
            let seed = seed_doc.to_design();
            let res = ladder_k3(&seed, h, lambda).map_err(lib_fail)?;
            for (i, d) in res.chain.iter().enumerate() {
                require_verdict(
                    verify_bibd(d).map_err(lib_fail)?,
                    &format!("chain member {} invalid", i),
                )?;
                let prov = format!(
                    "compose ladder --partial {} --h {} --lambda {} (member {})",
                    partial.display(),
                    h,
                    lambda,
                    i
                );
                let mut doc = document_from_design("bibd", d, None, &prov);
                if i == 0 {
                    doc.attach_system("blocking", &res.system0);
                }
                write_doc(&PathBuf::from(format!("{}{}.json", output, i)), &mut doc)?;
            }
            println!(
                "chain of {} designs on {} points; embedded copy {} blocks",
                res.chain.len(),
                res.chain[0].v(),
                res.embedded_copy.len()
            );
            for (i, (a, b)) in res.swap_points.iter().enumerate() {
                println!("step {}: swap points {} {}", i, a, b);
            }
            if scan {
                let chis =
                    chromatic_step_scan(&res.chain, &SolverConfig::default()).map_err(lib_fail)?;
                for (i, chi) in chis.iter().enumerate() {
                    println!("member {}: chi = {}", i, chi);
                }
            }
            Ok(())
        }
    }
}

// ---------------------------------------------------------------- lattice

fn cmd_lattice(op: LatticeCmd) -> CmdResult {
    match op {
        LatticeCmd::Alpha { k } => {
            if k < 2 {
                return Err(fail(2, "k must be at least 2"));
            }
            // degree profile of a single clique in one colour class
            let tau = vec![vec![BigInt::from(k - 1), BigInt::from(k - 1)]];
            let m = minimal_uniform_scalar(&tau, 2)
                .ok_or_else(|| fail(1, "uniform vector outside the rational span"))?;
            println!("alpha = {}", m);
            Ok(())
        }
        LatticeCmd::Beta { k } => {
            if k < 2 {
                return Err(fail(2, "k must be at least 2"));
            }
            let mu = vec![vec![BigInt::from(k * (k - 1))]];
            let m = minimal_uniform_scalar(&mu, 1)
                .ok_or_else(|| fail(1, "uniform vector outside the rational span"))?;
            println!("beta = {}", m);
            Ok(())
        }
        LatticeCmd::Allowable { k, g, variant } => {
            let variant = match variant.as_str() {
                "both-sides" => FamilyVariant::MeetsBothSides,
                "one-three" => FamilyVariant::OneThreeSplit,
                other => return Err(fail(2, format!("unknown variant '{}'", other))),
            };
            let family = enumerate_family(k, g, variant).map_err(lib_fail)?;
            let mus: Vec<Vec<BigInt>> =
                family.iter().map(|f| mu_of(f).entries).collect();
            match allowability_check(&mus) {
                Some(coeffs) => {
                    println!("feasible: {} vectors", family.len());
                    for (i, c) in coeffs.iter().enumerate() {
                        println!("c[{}] = {}", i, c);
                    }
                    Ok(())
                }
                None => Err(fail(1, "no strictly positive rational combination hits 1")),
            }
        }
        LatticeCmd::Typevec { k, l, family } => {
            let fam = subfamily(k, l, family).map_err(lib_fail)?;
            let g = 2 * l + 1;
            let avg = averaged_type(&fam, g).map_err(lib_fail)?;
            let closed =
                subfamily_closed_type(k as u64, l as u64, family).map_err(lib_fail)?;
            println!("family {} at (k={}, l={}): {} vectors", family, k, l, fam.len());
            for (i, (a, c)) in avg.iter().zip(closed.iter()).enumerate() {
                println!("component {}: enumerated {} closed {}", i, a, c);
            }
            if avg == closed {
                println!("match");
                Ok(())
            } else {
                Err(fail(1, "enumerated averaged type differs from the closed form"))
            }
        }
        LatticeCmd::Delta { k, l } => {
            let (d1, d2, both) = check_delta_positivity(k, l).map_err(lib_fail)?;
            println!("delta1 = {}", d1);
            println!("delta2 = {}", d2);
            println!("both positive: {}", both);
            if both {
                Ok(())
            } else {
                Err(fail(1, "a margin is non-positive"))
            }
        }
    }
}

// -------------------------------------------------------------- catalogue

fn catalogue_dir(arg: Option<PathBuf>) -> PathBuf {
    arg.or_else(|| std::env::var_os("BLOCKDESIGN_CATALOGUE").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("catalogue"))
}

fn cmd_catalogue(op: CatalogueCmd) -> CmdResult {
    match op {
        CatalogueCmd::Init { dir } => {
            let dir = catalogue_dir(dir);
            std::fs::create_dir_all(&dir)
                .map_err(|e| fail(3, format!("creating {}: {}", dir.display(), e)))?;
            write_manifest(&dir, &CatalogueManifest::default()).map_err(io_fail)?;
            println!("initialized {}", dir.display());
            Ok(())
        }
        CatalogueCmd::Add { name, file, dir } => {
            let dir = catalogue_dir(dir);
            let mut manifest = read_manifest(&dir).map_err(io_fail)?;
            let mut doc = read_doc(&file)?;
            require_verdict(verify_as_kind(&doc)?, "document fails verification")?;
            let stored = format!("{}.json", name);
            write_doc(&dir.join(&stored), &mut doc)?;
            let bytes = std::fs::read(dir.join(&stored))
                .map_err(|e| fail(3, format!("re-reading stored file: {}", e)))?;
            let group_type = doc.groups.as_ref().map(|gs| {
                GroupType::from_sizes(gs.iter().map(|g| g.len())).to_string()
            });
            let entry = CatalogueEntry {
                name: name.clone(),
                file: stored,
                kind: doc.kind.clone(),
                parameters: Parameters {
                    v: doc.points.len(),
                    k: doc.to_design().block_size(),
                    lambda: doc.lambda,
                    group_type,
                },
                digest: sha256_hex(&bytes),
            };
            manifest.entries.retain(|e| e.name != name);
            manifest.entries.push(entry);
            manifest.entries.sort_by(|a, b| a.name.cmp(&b.name));
            write_manifest(&dir, &manifest).map_err(io_fail)?;
            println!("added '{}'", name);
            Ok(())
        }
        CatalogueCmd::List { dir } => {
            let dir = catalogue_dir(dir);
            let manifest = read_manifest(&dir).map_err(io_fail)?;
            for e in &manifest.entries {
                let k = e.parameters.k.map(|k| k.to_string()).unwrap_or_else(|| "-".into());
                let gt = e.parameters.group_type.clone().unwrap_or_else(|| "-".into());
                println!(
                    "{}\t{}\tv={}\tk={}\tlambda={}\ttype={}\t{}\t{}",
                    e.name,
                    e.kind,
                    e.parameters.v,
                    k,
                    e.parameters.lambda,
                    gt,
                    e.file,
                    &e.digest[..12]
                );
            }
            Ok(())
        }
        CatalogueCmd::Check { dir } => {
            let dir = catalogue_dir(dir);
            let manifest = read_manifest(&dir).map_err(io_fail)?;
            for e in &manifest.entries {
                let path = dir.join(&e.file);
                let bytes = std::fs::read(&path)
                    .map_err(|err| fail(5, format!("entry '{}': {}", e.name, err)))?;
                if sha256_hex(&bytes) != e.digest {
                    return Err(fail(5, format!("entry '{}': digest mismatch", e.name)));
                }
                let doc = read_document(&path)
                    .map_err(|err| fail(5, format!("entry '{}': {:#}", e.name, err)))?;
                let v = verify_as_kind(&doc)
                    .map_err(|f| fail(5, format!("entry '{}': {}", e.name, f.msg)))?;
                if !v.ok {
                    return Err(fail(
                        5,
                        format!("entry '{}': {}", e.name, v.witness.unwrap_or_default()),
                    ));
                }
                println!("entry '{}': OK", e.name);
            }
            Ok(())
        }
    }
}

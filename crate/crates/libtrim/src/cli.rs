//! Command-line front end: check, census, variants, debloat, profile and
//! verify subcommands over `.mir` modules.
//!
//! Exit codes are uniform across commands: 0 on success, 1 when an
//! analysis or verification fails (bad module, unknown tag, divergence),
//! 2 when the environment fails (unreadable or unwritable files).

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::analysis::{field_census, find_dispatches, variant_analysis};
use crate::interp::{categorize_writes, equivalence, generate_traces, profile, DEFAULT_FUEL};
use crate::ir::Module;
use crate::layout::{compute_layout, field_key, FieldKey, IdentityMode};
use crate::passes::{combine, tool_a, tool_b, RemovalReport};
use crate::report::{
    census_payload, profile_payload, removal_payload, variants_payload, ReportDocument,
};
use crate::{load_module, Region};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ANALYSIS: i32 = 1;
pub const EXIT_ENV: i32 = 2;

#[derive(Parser)]
#[command(
    name = "libtrim",
    about = "Field-sensitive debloating for statically linked library code",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Identity {
    Path,
    Offset,
}

impl From<Identity> for IdentityMode {
    fn from(i: Identity) -> IdentityMode {
        match i {
            Identity::Path => IdentityMode::Path,
            Identity::Offset => IdentityMode::Offset,
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ToolChoice {
    A,
    B,
    Both,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and verify a module, reporting diagnostics.
    Check { path: PathBuf },
    /// Count static read and write sites per field, split by region.
    Census {
        path: PathBuf,
        #[arg(long, value_enum, default_value_t = Identity::Path)]
        identity: Identity,
        #[arg(long)]
        json: bool,
    },
    /// Compare the variants the library produces with those the
    /// application consumes.
    Variants {
        path: PathBuf,
        /// Tag field as `object.member...` or `Type.member...`; inferred
        /// from the largest library dispatch when omitted.
        #[arg(long)]
        tag: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Remove resultless and unused-variant computation from the library
    /// region.
    Debloat {
        path: PathBuf,
        #[arg(long, value_enum, default_value_t = ToolChoice::Both)]
        tool: ToolChoice,
        #[arg(long, value_enum, default_value_t = Identity::Path)]
        identity: Identity,
        #[arg(long)]
        tag: Option<String>,
        /// Where to write the transformed module.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Where to write the machine-readable removal report.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Replay generated traces and count dynamic field accesses.
    Profile {
        path: PathBuf,
        #[arg(long, default_value_t = 10)]
        runs: u32,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Identity::Path)]
        identity: Identity,
        #[arg(long)]
        json: bool,
    },
    /// Check a debloated module against the original on generated traces.
    Verify {
        original: PathBuf,
        debloated: PathBuf,
        #[arg(long, default_value_t = 10)]
        runs: u32,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

/// Parses command-line arguments and runs the selected command, returning
/// the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes; usage errors are
            // environment errors.
            let _ = e.print();
            return if e.use_stderr() { EXIT_ENV } else { EXIT_OK };
        }
    };
    match cli.cmd {
        Cmd::Check { path } => cmd_check(&path),
        Cmd::Census {
            path,
            identity,
            json,
        } => cmd_census(&path, identity.into(), json),
        Cmd::Variants { path, tag, json } => cmd_variants(&path, tag.as_deref(), json),
        Cmd::Debloat {
            path,
            tool,
            identity,
            tag,
            out,
            report,
            json,
        } => cmd_debloat(
            &path,
            tool,
            identity.into(),
            tag.as_deref(),
            out.as_deref(),
            report.as_deref(),
            json,
        ),
        Cmd::Profile {
            path,
            runs,
            seed,
            identity,
            json,
        } => cmd_profile(&path, runs, seed, identity.into(), json),
        Cmd::Verify {
            original,
            debloated,
            runs,
            seed,
        } => cmd_verify(&original, &debloated, runs, seed),
    }
}

fn read_module(path: &Path) -> Result<Module, i32> {
    let source = match std::fs::read_to_string(path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            return Err(EXIT_ENV);
        }
    };
    match load_module(&source) {
        Ok(m) => Ok(m),
        Err(e) => {
            eprint!("{}: {e}", path.display());
            Err(EXIT_ANALYSIS)
        }
    }
}

/// Resolves `--tag` text of the form `object.member...` (preferred) or
/// `Type.member...` to a census key under the given identity mode.
pub fn resolve_tag(m: &Module, text: &str, mode: IdentityMode) -> Result<FieldKey, String> {
    let parts: Vec<String> = text.split('.').map(str::to_string).collect();
    if parts.len() < 2 {
        return Err(format!(
            "tag path `{text}` must name a member, like msg.iType"
        ));
    }
    let root = &parts[0];
    let steps = &parts[1..];
    let root_ty = m
        .globals
        .iter()
        .find(|g| g.name == *root)
        .map(|g| g.ty.clone())
        .or_else(|| m.types.get(root).map(|_| root.clone()))
        .ok_or_else(|| format!("tag path `{text}` names no global object or type"))?;
    let layout = compute_layout(&m.types);
    field_key(&m.types, &layout, mode, &root_ty, steps)
        .ok_or_else(|| format!("tag path `{text}` does not reach a primitive field"))
}

/// The tag the library most plausibly dispatches on: the field of its
/// widest dispatch.
fn infer_tag(m: &Module, mode: IdentityMode) -> Option<FieldKey> {
    let summary = field_census(m, mode);
    find_dispatches(m, &summary)
        .into_iter()
        .filter(|d| d.region == Region::Library)
        .max_by_key(|d| d.cases.len())
        .map(|d| d.field)
}

fn tag_or_infer(m: &Module, tag: Option<&str>, mode: IdentityMode) -> Result<FieldKey, i32> {
    match tag {
        Some(text) => resolve_tag(m, text, mode).map_err(|e| {
            eprintln!("{e}");
            EXIT_ANALYSIS
        }),
        None => match infer_tag(m, mode) {
            Some(key) => {
                eprintln!("note: inferred --tag {key}");
                Ok(key)
            }
            None => {
                eprintln!("no dispatch found to infer --tag from; pass --tag explicitly");
                Err(EXIT_ANALYSIS)
            }
        },
    }
}

fn cmd_check(path: &Path) -> i32 {
    match read_module(path) {
        Ok(_) => {
            println!("ok");
            EXIT_OK
        }
        Err(code) => code,
    }
}

fn cmd_census(path: &Path, mode: IdentityMode, json: bool) -> i32 {
    let m = match read_module(path) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let summary = field_census(&m, mode);
    if json {
        let doc = ReportDocument::new("census", &m, mode, census_payload(&summary));
        print!("{}", doc.to_json());
        return EXIT_OK;
    }
    for (key, access) in &summary.fields {
        println!(
            "{key} reads lib={} app={} writes lib={} app={}",
            access.reads.library.len(),
            access.reads.app.len(),
            access.writes.library.len(),
            access.writes.app.len()
        );
    }
    for (object, access) in &summary.scalars {
        println!(
            "scalar {object} reads lib={} app={} writes lib={} app={}",
            access.reads.library.len(),
            access.reads.app.len(),
            access.writes.library.len(),
            access.writes.app.len()
        );
    }
    println!(
        "fields={} app_read={} resultless={}",
        summary.fields.len(),
        summary.app_read_fields().count(),
        crate::analysis::resultless_fields(&summary).len()
    );
    EXIT_OK
}

fn cmd_variants(path: &Path, tag: Option<&str>, json: bool) -> i32 {
    let m = match read_module(path) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let mode = IdentityMode::Path;
    let key = match tag_or_infer(&m, tag, mode) {
        Ok(k) => k,
        Err(code) => return code,
    };
    let summary = field_census(&m, mode);
    let v = variant_analysis(&m, &key, &summary);
    if json {
        let doc = ReportDocument::new("variants", &m, mode, variants_payload(&v));
        print!("{}", doc.to_json());
        return EXIT_OK;
    }
    let list = |s: &std::collections::BTreeSet<i64>| {
        s.iter()
            .map(i64::to_string)
            .collect::<Vec<_>>()
            .join(" ")
    };
    println!("tag={}", v.tag);
    println!("produced: {}", list(&v.produced));
    println!("consumed: {}", list(&v.consumed));
    println!("unused: {}", list(&v.unused));
    println!(
        "produced={} consumed={} unused={}",
        v.produced.len(),
        v.consumed.len(),
        v.unused.len()
    );
    EXIT_OK
}

fn run_tool(
    m: &Module,
    tool: ToolChoice,
    mode: IdentityMode,
    tag: Option<&str>,
) -> Result<(Module, RemovalReport), i32> {
    match tool {
        ToolChoice::A => Ok(tool_a(m, mode)),
        ToolChoice::B => {
            let key = tag_or_infer(m, tag, mode)?;
            Ok(tool_b(m, &key, mode))
        }
        ToolChoice::Both => match tag {
            Some(_) => {
                let key = tag_or_infer(m, tag, mode)?;
                Ok(combine(m, mode, &key))
            }
            None => match infer_tag(m, mode) {
                Some(key) => {
                    eprintln!("note: inferred --tag {key}");
                    Ok(combine(m, mode, &key))
                }
                None => {
                    eprintln!("note: no dispatch to drive variant removal; resultless removal only");
                    Ok(tool_a(m, mode))
                }
            },
        },
    }
}

fn cmd_debloat(
    path: &Path,
    tool: ToolChoice,
    mode: IdentityMode,
    tag: Option<&str>,
    out: Option<&Path>,
    report: Option<&Path>,
    json: bool,
) -> i32 {
    let m = match read_module(path) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let (trimmed, removal) = match run_tool(&m, tool, mode, tag) {
        Ok(r) => r,
        Err(code) => return code,
    };
    if let Some(out_path) = out {
        let text = crate::text::print_module(&trimmed);
        if let Err(e) = std::fs::write(out_path, text) {
            eprintln!("{}: {e}", out_path.display());
            return EXIT_ENV;
        }
    }
    let doc = ReportDocument::new("debloat", &m, mode, removal_payload(&removal));
    if let Some(report_path) = report {
        if let Err(e) = std::fs::write(report_path, doc.to_json()) {
            eprintln!("{}: {e}", report_path.display());
            return EXIT_ENV;
        }
    }
    if json {
        print!("{}", doc.to_json());
    } else {
        println!(
            "tool={} removed={} library_total={} ratio={:.2}",
            removal.tool,
            removal.removed.len(),
            removal.library_total,
            removal.removal_ratio()
        );
    }
    EXIT_OK
}

fn cmd_profile(path: &Path, runs: u32, seed: u64, mode: IdentityMode, json: bool) -> i32 {
    let m = match read_module(path) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let p = profile(&m, mode, runs, seed);
    let summary = field_census(&m, mode);
    let cats = categorize_writes(&p, &summary);
    if json {
        let doc = ReportDocument::new("profile", &m, mode, profile_payload(&p, &cats));
        print!("{}", doc.to_json());
        return EXIT_OK;
    }
    for (key, counts) in &p.keys {
        println!(
            "{key} reads lib={} app={} writes lib={} app={}",
            counts.reads.library, counts.reads.app, counts.writes.library, counts.writes.app
        );
    }
    for (run, trap) in &p.traps {
        println!("trap run={run}: {trap}");
    }
    println!(
        "writes unremovable={} category1={} category2={} total={}",
        cats.unremovable,
        cats.category1,
        cats.category2,
        cats.total()
    );
    println!("runs={runs} seed={seed}");
    EXIT_OK
}

fn cmd_verify(original: &Path, debloated: &Path, runs: u32, seed: u64) -> i32 {
    let a = match read_module(original) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let b = match read_module(debloated) {
        Ok(m) => m,
        Err(code) => return code,
    };
    // Traces are shaped by the original module; the debloated one must
    // consume the same streams.
    let traces = generate_traces(&a, runs, seed);
    match equivalence(&a, &b, &traces, DEFAULT_FUEL) {
        crate::interp::Verdict::Equivalent => {
            println!("equivalent runs={runs} seed={seed}");
            EXIT_OK
        }
        crate::interp::Verdict::Diverged { trace, divergence } => {
            println!("divergence trace={trace}: {divergence}");
            EXIT_ANALYSIS
        }
    }
}

//! Field-sensitive debloating for statically linked library code.
//!
//! The toolkit works on a small typed IR (see [`ir`]) with a textual form
//! (`.mir` files, see [`text`]). A module is split into a Library region and
//! an Application region; the analyses in [`analysis`] find message fields
//! the library writes but nobody reads ("resultless" fields) and message
//! variants the library produces but the application never consumes. The
//! passes in [`passes`] remove the computation behind both, and the
//! interpreter in [`interp`] replays recorded traces to check that trimmed
//! modules behave identically to their originals.
//!
//! Start with the runnable examples (`cargo run --example census`) or the
//! `libtrim` binary, which exposes the same operations as subcommands.

pub mod analysis;
pub mod cli;
pub mod interp;
pub mod ir;
pub mod layout;
pub mod modgen;
pub mod passes;
pub mod report;
pub mod text;

pub use ir::{Module, Region};
pub use layout::IdentityMode;

/// Parses module text and verifies it, the common entry point for tools.
pub fn load_module(source: &str) -> Result<ir::Module, LoadError> {
    let module = text::parse_module(source).map_err(LoadError::Parse)?;
    let diags = ir::verify::verify_module(&module);
    if diags.is_empty() {
        Ok(module)
    } else {
        Err(LoadError::Invalid(diags))
    }
}

/// Source text of the bundled MIDI-reader module used throughout the
/// examples and tests.
pub const CORPUS_SOURCE: &str = include_str!("../assets/midilib.mir");

/// Loads the bundled MIDI-reader module.
pub fn corpus() -> ir::Module {
    load_module(CORPUS_SOURCE).expect("bundled module must load")
}

/// Why a module could not be loaded: it did not parse, or it parsed but
/// failed verification.
#[derive(Debug)]
pub enum LoadError {
    Parse(Vec<text::ParseError>),
    Invalid(Vec<ir::verify::Diagnostic>),
}

impl std::fmt::Display for LoadError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LoadError::Parse(errors) => {
                for e in errors {
                    writeln!(f, "{e}")?;
                }
                Ok(())
            }
            LoadError::Invalid(diags) => {
                for d in diags {
                    writeln!(f, "{d}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for LoadError {}

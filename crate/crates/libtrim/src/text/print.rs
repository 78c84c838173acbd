//! Canonical printer. Output is a pure function of the module, so printing
//! the result of a parse and reparsing it reproduces the module exactly.

use std::fmt::Write;

use crate::ir::{Function, Inst, Instruction, Module, TypeDef};

/// Renders the module in canonical form: declaration order preserved,
/// two-space indents, every instruction carrying its `#N` id.
pub fn print_module(module: &Module) -> String {
    let mut paragraphs: Vec<String> = Vec::new();
    let mut alias_run = String::new();
    for (name, def) in module.types.user_entries() {
        match def {
            TypeDef::Primitive { width } => {
                let _ = writeln!(alias_run, "type {name} = int{width}");
            }
            TypeDef::Record { fields } | TypeDef::Overlay { members: fields } => {
                if !alias_run.is_empty() {
                    paragraphs.push(std::mem::take(&mut alias_run));
                }
                let kind = if matches!(def, TypeDef::Record { .. }) { "record" } else { "overlay" };
                let mut out = format!("type {name} = {kind} {{\n");
                for field in fields {
                    let _ = writeln!(out, "  {}: {},", field.name, field.ty);
                }
                out.push_str("}\n");
                paragraphs.push(out);
            }
        }
    }
    if !alias_run.is_empty() {
        paragraphs.push(alias_run);
    }

    if !module.globals.is_empty() {
        let mut out = String::new();
        for g in &module.globals {
            let _ = writeln!(out, "global {}: {}", g.name, g.ty);
        }
        paragraphs.push(out);
    }
    if !module.externs.is_empty() {
        let mut out = String::new();
        for e in &module.externs {
            let _ = writeln!(out, "extern {e}");
        }
        paragraphs.push(out);
    }
    for func in &module.functions {
        paragraphs.push(print_function(func));
    }
    paragraphs.join("\n")
}

fn print_function(func: &Function) -> String {
    let mut out = String::new();
    let region = match func.region {
        crate::ir::Region::Library => "library",
        crate::ir::Region::Application => "app",
    };
    let params = func
        .params
        .iter()
        .map(|p| format!("{}: {}", p.name, p.ty))
        .collect::<Vec<_>>()
        .join(", ");
    let _ = writeln!(out, "{region} fn {}({params}) {{", func.name);
    for local in &func.locals {
        let _ = writeln!(out, "  local {}: {}", local.name, local.ty);
    }
    for block in &func.blocks {
        let _ = writeln!(out, "{}:", block.label);
        for instr in &block.instrs {
            let _ = writeln!(out, "  {}", render(instr));
        }
    }
    out.push_str("}\n");
    out
}

fn render(instr: &Instruction) -> String {
    let body = match &instr.inst {
        Inst::Const { dst, value } => format!("const {dst}, {value}"),
        Inst::Move { dst, src } => format!("move {dst}, {src}"),
        Inst::Bin { op, dst, lhs, rhs } => format!("{} {dst}, {lhs}, {rhs}", op.mnemonic()),
        Inst::Addr { dst, path } => format!("addr {dst}, {path}"),
        Inst::Load { dst, addr } => format!("load {dst}, {addr}"),
        Inst::Store { addr, value } => format!("store {addr}, {value}"),
        Inst::Call { dst, callee, args } => {
            let args = args.join(", ");
            match dst {
                Some(dst) => format!("call {dst}, {callee}({args})"),
                None => format!("call {callee}({args})"),
            }
        }
        Inst::Input { dst } => format!("input {dst}"),
        Inst::Output { value } => format!("output {value}"),
        Inst::Jump { target } => format!("jmp {target}"),
        Inst::Branch { cond, then_to, else_to } => format!("br {cond}, {then_to}, {else_to}"),
        Inst::Switch { value, cases, default } => {
            let cases = cases
                .iter()
                .map(|(k, label)| format!("{k}: {label}"))
                .collect::<Vec<_>>()
                .join(", ");
            format!("switch {value}, [{cases}], {default}")
        }
        Inst::Ret { value } => match value {
            Some(v) => format!("ret {v}"),
            None => "ret".to_string(),
        },
    };
    format!("{body} {}", instr.id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::parse_module;

    #[test]
    fn aliases_print_consecutively_and_aggregates_get_paragraphs() {
        let text = "type A = int4\ntype B = int8\ntype R = record {\n  x: A,\n}\nglobal g: R\napp fn main() {\nentry:\n  ret\n}\n";
        let printed = print_module(&parse_module(text).unwrap());
        assert!(printed.contains("type A = int4\ntype B = int8\n\ntype R = record {"));
        assert!(printed.ends_with("}\n"));
    }

    #[test]
    fn every_instruction_carries_its_id() {
        let text = "app fn main() {\nentry:\n  const a, 1\n  output a\n  ret\n}\n";
        let printed = print_module(&parse_module(text).unwrap());
        for line in printed.lines().filter(|l| l.starts_with("  ")) {
            assert!(line.contains('#'), "missing id on {line:?}");
        }
    }

    #[test]
    fn functions_with_params_and_locals_round_trip() {
        let text = "library fn scale(x: int4, k: int4) {\n  local tmp: int4\nentry:\n  mul tmp, x, k\n  ret tmp\n}\napp fn main() {\nentry:\n  const a, 3\n  const b, 4\n  call r, scale(a, b)\n  output r\n  ret\n}\n";
        let m = parse_module(text).unwrap();
        let printed = print_module(&m);
        assert_eq!(parse_module(&printed).unwrap(), m);
        assert!(printed.contains("library fn scale(x: int4, k: int4) {"));
        assert!(printed.contains("  local tmp: int4"));
    }
}

//! Recursive-descent parser. Errors do not abort the parse: each statement
//! recovers at the next line, so a single run reports every malformed line
//! (up to a cap).

use std::collections::BTreeSet;

use super::lex::{lex, Tok, Token};
use super::{ParseError, SourceSpan};
use crate::ir::{
    BinOp, Block, Field, FieldPath, Function, Inst, InstId, Instruction, Module, Region, TypeDef,
};

const MAX_ERRORS: usize = 50;

/// Parses module text. On failure every collected error is returned, in
/// source order.
pub fn parse_module(source: &str) -> Result<Module, Vec<ParseError>> {
    let (tokens, mut errors) = lex(source);
    let mut parser = Parser {
        tokens,
        pos: 0,
        errors: Vec::new(),
        module: Module::new(),
        pending_ids: Vec::new(),
        saw_decl: false,
    };
    parser.parse_top_level();
    errors.append(&mut parser.errors);
    errors.sort_by_key(|e| (e.span.line, e.span.column));
    if errors.is_empty() {
        assign_ids(&mut parser.module, &parser.pending_ids);
        Ok(parser.module)
    } else {
        errors.truncate(MAX_ERRORS);
        Err(errors)
    }
}

/// Fills in ids left implicit by the source: explicit `#N` annotations are
/// kept, everything else gets the next unused number counting from 1.
fn assign_ids(module: &mut Module, pending: &[Option<u32>]) {
    let mut used: BTreeSet<u32> = pending.iter().flatten().copied().collect();
    let mut next = 1u32;
    let mut slot = pending.iter();
    for func in &mut module.functions {
        for block in &mut func.blocks {
            for instr in &mut block.instrs {
                match slot.next().copied().flatten() {
                    Some(id) => instr.id = InstId(id),
                    None => {
                        while used.contains(&next) {
                            next += 1;
                        }
                        used.insert(next);
                        instr.id = InstId(next);
                    }
                }
            }
        }
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    errors: Vec<ParseError>,
    module: Module,
    /// Explicit id (or None) for every instruction, in traversal order.
    pending_ids: Vec<Option<u32>>,
    saw_decl: bool,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos.min(self.tokens.len() - 1)].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek().tok, Tok::Eof)
    }

    fn error_here(&mut self, expected: impl Into<String>) {
        if self.errors.len() >= MAX_ERRORS {
            return;
        }
        let token = self.peek();
        self.errors.push(ParseError {
            span: token.span,
            expected: expected.into(),
            found: token.tok.describe(),
        });
    }

    /// Skips the rest of the current line so parsing can continue.
    fn recover_line(&mut self) {
        loop {
            match self.peek().tok {
                Tok::Newline => {
                    self.advance();
                    return;
                }
                Tok::Eof => return,
                _ => {
                    self.advance();
                }
            }
        }
    }

    fn skip_newlines(&mut self) {
        while matches!(self.peek().tok, Tok::Newline) {
            self.advance();
        }
    }

    fn eat_punct(&mut self, c: char) -> bool {
        if self.peek().tok == Tok::Punct(c) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, c: char) -> bool {
        if self.eat_punct(c) {
            true
        } else {
            self.error_here(format!("`{c}`"));
            false
        }
    }

    fn expect_ident(&mut self, what: &str) -> Option<String> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                self.advance();
                Some(s)
            }
            _ => {
                self.error_here(what);
                None
            }
        }
    }

    fn expect_int(&mut self, what: &str) -> Option<i64> {
        match self.peek().tok {
            Tok::Int(v) => {
                self.advance();
                Some(v)
            }
            _ => {
                self.error_here(what);
                None
            }
        }
    }

    fn expect_newline(&mut self) {
        match self.peek().tok {
            Tok::Newline => {
                self.advance();
            }
            Tok::Eof => {}
            _ => {
                self.error_here("end of line");
                self.recover_line();
            }
        }
    }

    fn parse_top_level(&mut self) {
        loop {
            self.skip_newlines();
            if self.at_eof() || self.errors.len() >= MAX_ERRORS {
                break;
            }
            match self.peek().tok.clone() {
                Tok::Ident(kw) => match kw.as_str() {
                    "type" => self.parse_type(),
                    "global" => self.parse_global(),
                    "extern" => self.parse_extern(),
                    "library" => self.parse_function(Region::Library),
                    "app" => self.parse_function(Region::Application),
                    _ => {
                        self.error_here(
                            "a declaration: `type`, `global`, `extern`, `library fn` or `app fn`",
                        );
                        self.recover_line();
                    }
                },
                _ => {
                    self.error_here(
                        "a declaration: `type`, `global`, `extern`, `library fn` or `app fn`",
                    );
                    self.recover_line();
                }
            }
        }
        if !self.saw_decl && self.errors.is_empty() {
            self.errors.push(ParseError {
                span: SourceSpan { line: 1, column: 1, length: 1 },
                expected: "a declaration: `type`, `global`, `extern`, `library fn` or `app fn`"
                    .to_string(),
                found: "end of input".to_string(),
            });
        }
    }

    fn parse_type(&mut self) {
        self.advance(); // `type`
        let name_span = self.peek().span;
        let Some(name) = self.expect_ident("a type name") else {
            self.recover_line();
            return;
        };
        if !self.expect_punct('=') {
            self.recover_line();
            return;
        }
        let def = match self.peek().tok.clone() {
            Tok::Ident(kw) if kw == "record" => {
                self.advance();
                let Some(fields) = self.parse_field_list() else { return };
                TypeDef::Record { fields }
            }
            Tok::Ident(kw) if kw == "overlay" => {
                self.advance();
                let Some(members) = self.parse_field_list() else { return };
                TypeDef::Overlay { members }
            }
            Tok::Ident(prim) => {
                self.advance();
                match self.module.types.primitive_width(&prim) {
                    Some(width) => TypeDef::Primitive { width },
                    None => {
                        self.errors.push(ParseError {
                            span: name_span,
                            expected: "`record`, `overlay` or a primitive type name".to_string(),
                            found: format!("`{prim}`"),
                        });
                        self.recover_line();
                        return;
                    }
                }
            }
            _ => {
                self.error_here("`record`, `overlay` or a primitive type name");
                self.recover_line();
                return;
            }
        };
        if let Err(msg) = self.module.types.declare(&name, def) {
            self.errors.push(ParseError {
                span: name_span,
                expected: "a new type name".to_string(),
                found: msg,
            });
        }
        self.saw_decl = true;
        self.expect_newline();
    }

    /// `{ name: ty, ... }` with newlines allowed anywhere inside the braces.
    fn parse_field_list(&mut self) -> Option<Vec<Field>> {
        if !self.expect_punct('{') {
            self.recover_line();
            return None;
        }
        let mut fields = Vec::new();
        loop {
            self.skip_newlines();
            if self.eat_punct('}') {
                return Some(fields);
            }
            if self.at_eof() {
                self.error_here("`}`");
                return None;
            }
            let Some(name) = self.expect_ident("a member name") else {
                self.recover_line();
                return None;
            };
            if !self.expect_punct(':') {
                self.recover_line();
                return None;
            }
            let Some(ty) = self.expect_ident("a type name") else {
                self.recover_line();
                return None;
            };
            fields.push(Field { name, ty });
            self.skip_newlines();
            if !self.eat_punct(',') {
                self.skip_newlines();
                if !self.expect_punct('}') {
                    self.recover_line();
                    return None;
                }
                return Some(fields);
            }
        }
    }

    fn parse_global(&mut self) {
        self.advance(); // `global`
        let Some(name) = self.expect_ident("a global name") else {
            self.recover_line();
            return;
        };
        if !self.expect_punct(':') {
            self.recover_line();
            return;
        }
        let Some(ty) = self.expect_ident("a type name") else {
            self.recover_line();
            return;
        };
        self.module.globals.push(Field { name, ty });
        self.saw_decl = true;
        self.expect_newline();
    }

    fn parse_extern(&mut self) {
        self.advance(); // `extern`
        let Some(name) = self.expect_ident("an extern function name") else {
            self.recover_line();
            return;
        };
        self.module.externs.push(name);
        self.saw_decl = true;
        self.expect_newline();
    }

    fn parse_function(&mut self, region: Region) {
        self.advance(); // `library` / `app`
        if self.expect_ident("`fn`").as_deref() != Some("fn") {
            self.recover_line();
            return;
        }
        let Some(name) = self.expect_ident("a function name") else {
            self.recover_line();
            return;
        };
        let mut func = Function {
            name,
            region,
            params: Vec::new(),
            locals: Vec::new(),
            blocks: Vec::new(),
        };
        if self.expect_punct('(') && !self.eat_punct(')') {
            loop {
                let Some(pname) = self.expect_ident("a parameter name") else { break };
                if !self.expect_punct(':') {
                    break;
                }
                let Some(pty) = self.expect_ident("a type name") else { break };
                func.params.push(Field { name: pname, ty: pty });
                if self.eat_punct(')') {
                    break;
                }
                if !self.expect_punct(',') {
                    break;
                }
            }
        }
        if !self.expect_punct('{') {
            self.recover_line();
            return;
        }
        self.expect_newline();
        self.parse_body(&mut func);
        self.module.functions.push(func);
        self.saw_decl = true;
    }

    fn parse_body(&mut self, func: &mut Function) {
        loop {
            self.skip_newlines();
            if self.eat_punct('}') {
                return;
            }
            if self.at_eof() || self.errors.len() >= MAX_ERRORS {
                self.error_here("`}` closing the function body");
                return;
            }
            let Some(head) = self.expect_ident("a label or an instruction") else {
                self.recover_line();
                continue;
            };
            if head == "local" {
                if !func.blocks.is_empty() {
                    self.error_here("locals before the first label");
                    self.recover_line();
                    continue;
                }
                let Some(name) = self.expect_ident("a local name") else {
                    self.recover_line();
                    continue;
                };
                if !self.expect_punct(':') {
                    self.recover_line();
                    continue;
                }
                let Some(ty) = self.expect_ident("a type name") else {
                    self.recover_line();
                    continue;
                };
                func.locals.push(Field { name, ty });
                self.expect_newline();
            } else if self.eat_punct(':') {
                func.blocks.push(Block { label: head, instrs: Vec::new() });
                self.expect_newline();
            } else {
                let Some(inst) = self.parse_instruction(&head) else {
                    self.recover_line();
                    continue;
                };
                let explicit_id = if self.eat_punct('#') {
                    self.expect_int("an instruction id").map(|v| v as u32)
                } else {
                    None
                };
                match func.blocks.last_mut() {
                    Some(block) => {
                        block.instrs.push(Instruction { id: InstId(0), inst });
                        self.pending_ids.push(explicit_id);
                    }
                    None => self.error_here("a label before the first instruction"),
                }
                self.expect_newline();
            }
        }
    }

    fn parse_instruction(&mut self, mnemonic: &str) -> Option<Inst> {
        if let Some(op) = BinOp::from_mnemonic(mnemonic) {
            let dst = self.expect_ident("a destination register")?;
            self.expect_punct(',').then_some(())?;
            let lhs = self.expect_ident("a register")?;
            self.expect_punct(',').then_some(())?;
            let rhs = self.expect_ident("a register")?;
            return Some(Inst::Bin { op, dst, lhs, rhs });
        }
        match mnemonic {
            "const" => {
                let dst = self.expect_ident("a destination register")?;
                self.expect_punct(',').then_some(())?;
                let value = self.expect_int("an integer literal")?;
                Some(Inst::Const { dst, value })
            }
            "move" => {
                let dst = self.expect_ident("a destination register")?;
                self.expect_punct(',').then_some(())?;
                let src = self.expect_ident("a source register")?;
                Some(Inst::Move { dst, src })
            }
            "addr" => {
                let dst = self.expect_ident("a destination register")?;
                self.expect_punct(',').then_some(())?;
                let path = self.parse_path()?;
                Some(Inst::Addr { dst, path })
            }
            "load" => {
                let dst = self.expect_ident("a destination register")?;
                self.expect_punct(',').then_some(())?;
                let addr = self.expect_ident("an address register")?;
                Some(Inst::Load { dst, addr })
            }
            "store" => {
                let addr = self.expect_ident("an address register")?;
                self.expect_punct(',').then_some(())?;
                let value = self.expect_ident("a value register")?;
                Some(Inst::Store { addr, value })
            }
            "call" => {
                let first = self.expect_ident("a register or function name")?;
                let (dst, callee) = if self.peek().tok == Tok::Punct('(') {
                    (None, first)
                } else {
                    self.expect_punct(',').then_some(())?;
                    let callee = self.expect_ident("a function name")?;
                    (Some(first), callee)
                };
                self.expect_punct('(').then_some(())?;
                let mut args = Vec::new();
                if !self.eat_punct(')') {
                    loop {
                        args.push(self.expect_ident("an argument register")?);
                        if self.eat_punct(')') {
                            break;
                        }
                        self.expect_punct(',').then_some(())?;
                    }
                }
                Some(Inst::Call { dst, callee, args })
            }
            "input" => Some(Inst::Input { dst: self.expect_ident("a destination register")? }),
            "output" => Some(Inst::Output { value: self.expect_ident("a value register")? }),
            "jmp" => Some(Inst::Jump { target: self.expect_ident("a block label")? }),
            "br" => {
                let cond = self.expect_ident("a condition register")?;
                self.expect_punct(',').then_some(())?;
                let then_to = self.expect_ident("a block label")?;
                self.expect_punct(',').then_some(())?;
                let else_to = self.expect_ident("a block label")?;
                Some(Inst::Branch { cond, then_to, else_to })
            }
            "switch" => {
                let value = self.expect_ident("a register")?;
                self.expect_punct(',').then_some(())?;
                self.expect_punct('[').then_some(())?;
                let mut cases = Vec::new();
                if !self.eat_punct(']') {
                    loop {
                        let k = self.expect_int("a case constant")?;
                        self.expect_punct(':').then_some(())?;
                        let label = self.expect_ident("a block label")?;
                        cases.push((k, label));
                        if self.eat_punct(']') {
                            break;
                        }
                        self.expect_punct(',').then_some(())?;
                    }
                }
                self.expect_punct(',').then_some(())?;
                let default = self.expect_ident("a default label")?;
                Some(Inst::Switch { value, cases, default })
            }
            "ret" => {
                let value = match &self.peek().tok {
                    Tok::Ident(_) => self.expect_ident("a register"),
                    _ => None,
                };
                Some(Inst::Ret { value })
            }
            _ => {
                // Point the error at the mnemonic itself, which has already
                // been consumed.
                let span = self.tokens[self.pos.saturating_sub(1)].span;
                if self.errors.len() < MAX_ERRORS {
                    self.errors.push(ParseError {
                        span,
                        expected: "an instruction mnemonic".to_string(),
                        found: format!("`{mnemonic}`"),
                    });
                }
                None
            }
        }
    }

    fn parse_path(&mut self) -> Option<FieldPath> {
        let root = self.expect_ident("an object name")?;
        let mut steps = Vec::new();
        while self.eat_punct('.') {
            steps.push(self.expect_ident("a field name")?);
        }
        Some(FieldPath { root, steps })
    }
}

//! Byte layout of aggregate types and the two notions of field identity.
//!
//! Layout follows the usual C rules with natural alignment: record fields
//! sit at increasing offsets aligned to their own alignment, overlay members
//! all start at offset zero, and a type's size is padded to a multiple of
//! its alignment.
//!
//! A field can be identified two ways. Path identity keeps the full step
//! sequence and distinguishes every leaf. Offset identity keys a leaf by
//! `(root type, byte offset, width)`, which deliberately conflates overlay
//! members that share storage; an access census under offset identity
//! therefore reports reads against a field whenever any leaf occupying the
//! same bytes is read. Coarser keys can only merge, never split: two leaves
//! with equal path keys always have equal offset keys.

use std::collections::BTreeMap;
use std::fmt;

use crate::ir::{TypeDef, TypeTable, Width};

/// Sizes, alignments and member offsets for every type in a table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayoutTable {
    sizes: BTreeMap<String, (u64, u64)>,
    offsets: BTreeMap<(String, String), u64>,
}

impl LayoutTable {
    pub fn size_of(&self, ty: &str) -> Option<u64> {
        self.sizes.get(ty).map(|&(size, _)| size)
    }

    pub fn align_of(&self, ty: &str) -> Option<u64> {
        self.sizes.get(ty).map(|&(_, align)| align)
    }

    /// Offset of a direct member within its containing type.
    pub fn member_offset(&self, ty: &str, member: &str) -> Option<u64> {
        self.offsets.get(&(ty.to_string(), member.to_string())).copied()
    }

    /// Offset of a leaf from the start of `root_ty`, summed along `steps`.
    pub fn path_offset(&self, types: &TypeTable, root_ty: &str, steps: &[String]) -> Option<u64> {
        let mut ty = root_ty.to_string();
        let mut offset = 0;
        for step in steps {
            offset += self.member_offset(&ty, step)?;
            let def = types.get(&ty)?;
            ty = def.fields().iter().find(|f| f.name == *step)?.ty.clone();
        }
        Some(offset)
    }
}

fn round_up(value: u64, align: u64) -> u64 {
    debug_assert!(align > 0);
    value.div_ceil(align) * align
}

/// Computes layout for every type in the table. The table must be verified
/// first: unknown member types or reference cycles panic here.
pub fn compute_layout(types: &TypeTable) -> LayoutTable {
    let mut layout = LayoutTable { sizes: BTreeMap::new(), offsets: BTreeMap::new() };
    for (name, _) in types.iter() {
        lay_out(types, name, &mut layout);
    }
    layout
}

fn lay_out(types: &TypeTable, name: &str, layout: &mut LayoutTable) -> (u64, u64) {
    if let Some(&cached) = layout.sizes.get(name) {
        return cached;
    }
    let def = types.get(name).expect("layout of unknown type");
    let result = match def {
        TypeDef::Primitive { width } => (*width as u64, *width as u64),
        TypeDef::Record { fields } => {
            let mut offset = 0;
            let mut align = 1;
            for field in fields {
                let (fsize, falign) = lay_out(types, &field.ty, layout);
                offset = round_up(offset, falign);
                layout.offsets.insert((name.to_string(), field.name.clone()), offset);
                offset += fsize;
                align = align.max(falign);
            }
            (round_up(offset, align), align)
        }
        TypeDef::Overlay { members } => {
            let mut size = 0;
            let mut align = 1;
            for member in members {
                let (msize, malign) = lay_out(types, &member.ty, layout);
                layout.offsets.insert((name.to_string(), member.name.clone()), 0);
                size = size.max(msize);
                align = align.max(malign);
            }
            (round_up(size, align), align)
        }
    };
    layout.sizes.insert(name.to_string(), result);
    result
}

/// How leaves are grouped in a census.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IdentityMode {
    /// Full step sequence: every leaf is its own field.
    Path,
    /// `(root type, byte offset, width)`: overlay members sharing storage
    /// collapse into one field.
    Offset,
}

impl IdentityMode {
    pub fn name(self) -> &'static str {
        match self {
            IdentityMode::Path => "path",
            IdentityMode::Offset => "offset",
        }
    }
}

impl std::str::FromStr for IdentityMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "path" => Ok(IdentityMode::Path),
            "offset" => Ok(IdentityMode::Offset),
            other => Err(format!("unknown identity mode `{other}`, expected `path` or `offset`")),
        }
    }
}

/// Identity of one census field. Keys are type-level: the root object is
/// erased, so two objects of the same type share field keys.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FieldKey {
    Path { root_ty: String, steps: Vec<String> },
    Offset { root_ty: String, offset: u64, width: Width },
}

impl FieldKey {
    pub fn root_ty(&self) -> &str {
        match self {
            FieldKey::Path { root_ty, .. } | FieldKey::Offset { root_ty, .. } => root_ty,
        }
    }
}

impl fmt::Display for FieldKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldKey::Path { root_ty, steps } => {
                write!(f, "{root_ty}")?;
                for step in steps {
                    write!(f, ".{step}")?;
                }
                Ok(())
            }
            FieldKey::Offset { root_ty, offset, width } => {
                write!(f, "{root_ty}+{offset}:{width}")
            }
        }
    }
}

/// The census key for the leaf reached from `root_ty` through `steps`.
/// Returns `None` when the path does not resolve to a primitive.
pub fn field_key(
    types: &TypeTable,
    layout: &LayoutTable,
    mode: IdentityMode,
    root_ty: &str,
    steps: &[String],
) -> Option<FieldKey> {
    let leaf_ty = types.resolve_steps(root_ty, steps)?;
    let width = types.primitive_width(leaf_ty)?;
    match mode {
        IdentityMode::Path => Some(FieldKey::Path {
            root_ty: root_ty.to_string(),
            steps: steps.to_vec(),
        }),
        IdentityMode::Offset => Some(FieldKey::Offset {
            root_ty: root_ty.to_string(),
            offset: layout.path_offset(types, root_ty, steps)?,
            width,
        }),
    }
}

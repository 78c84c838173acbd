//! Seeded synthesis of test inputs: reader-style modules shaped like the
//! bundled corpus, and small acyclic control-flow graphs for checking the
//! dataflow analyses against brute-force oracles.
//!
//! Generation goes through the textual format and [`crate::load_module`],
//! so every produced module is parseable and verifier-clean by
//! construction. All randomness is drawn from a seeded ChaCha stream;
//! equal seeds give byte-identical modules.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ir::Module;

const WIDTHS: [&str; 3] = ["int1", "int2", "int4"];

/// Binary operators safe to place in removable chains: none of them trap,
/// so deleting any single link never changes termination.
const CHAIN_OPS: [&str; 4] = ["add", "sub", "mul", "ne"];

struct Variant {
    tag: i64,
    arity: usize,
    consumed: bool,
    padded: bool,
}

/// Builds a library/application pair in the shape the passes target: a
/// reader that assembles one of several tagged variants into a shared
/// record per message, and an application that dispatches on the tag but
/// handles only a subset.
///
/// Payload fields of consumed variants are read by the application; those
/// of unused variants are written and never read. Arm bodies store values
/// built from inputs and constants only, so removing an arm's stores never
/// turns a previously read field into an unread one. That keeps each pass
/// idempotent on these modules, which the property suite relies on.
pub fn reader_module(seed: u64) -> Module {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nvariants = rng.gen_range(2..=6);
    let nconsumed = rng.gen_range(1..=nvariants);
    let mut picks: Vec<usize> = (0..nvariants).collect();
    picks.shuffle(&mut rng);
    let consumed_set: Vec<usize> = picks[..nconsumed].to_vec();

    let variants: Vec<Variant> = (0..nvariants)
        .map(|i| Variant {
            tag: 100 + 10 * i as i64,
            arity: rng.gen_range(1..=3),
            consumed: consumed_set.contains(&i),
            padded: rng.gen_bool(0.4),
        })
        .collect();

    let with_acc = rng.gen_bool(0.5);
    let app_reads_acc = with_acc && rng.gen_bool(0.5);
    let with_note = rng.gen_bool(0.5);
    let first_unused = variants.iter().position(|v| !v.consumed);
    let with_cache = first_unused.is_some() && rng.gen_bool(0.5);
    let chain_app = nconsumed >= 2 && rng.gen_bool(0.33);

    let mut s = String::new();
    for (i, v) in variants.iter().enumerate() {
        let _ = writeln!(s, "type V{i} = record {{");
        for j in 0..v.arity {
            let w = WIDTHS[rng.gen_range(0..WIDTHS.len())];
            let _ = writeln!(s, "  f{j}: {w},");
        }
        if v.padded {
            let _ = writeln!(s, "  pad: int1,");
        }
        let _ = writeln!(s, "}}\n");
    }
    let _ = writeln!(s, "type Body = overlay {{");
    for i in 0..nvariants {
        let _ = writeln!(s, "  v{i}: V{i},");
    }
    let _ = writeln!(s, "}}\n");
    let _ = writeln!(s, "type Msg = record {{");
    let _ = writeln!(s, "  tag: int4,");
    let _ = writeln!(s, "  size: int4,");
    if with_acc {
        let _ = writeln!(s, "  acc: int4,");
    }
    if with_note {
        let _ = writeln!(s, "  note: int4,");
    }
    let _ = writeln!(s, "  u: Body,");
    let _ = writeln!(s, "}}\n");
    let _ = writeln!(s, "global msg: Msg");
    let _ = writeln!(s, "global ptr: int4");
    if with_cache {
        let _ = writeln!(s, "global cache: int4");
    }
    let _ = writeln!(s);

    let _ = writeln!(s, "library fn readnext() {{");
    let _ = writeln!(s, "entry:");
    let _ = writeln!(s, "  input t");
    let _ = writeln!(s, "  const stop, 0");
    let _ = writeln!(s, "  eq fin, t, stop");
    let _ = writeln!(s, "  br fin, atend, begin");
    let _ = writeln!(s, "atend:");
    let _ = writeln!(s, "  const no, 0");
    let _ = writeln!(s, "  ret no");
    let _ = writeln!(s, "begin:");
    let _ = writeln!(s, "  addr ptag, msg.tag");
    let _ = writeln!(s, "  store ptag, t");
    if with_acc {
        let _ = writeln!(s, "  input d");
        let _ = writeln!(s, "  addr pacc, msg.acc");
        let _ = writeln!(s, "  load a0, pacc");
        let _ = writeln!(s, "  add a1, a0, d");
        let _ = writeln!(s, "  store pacc, a1");
    }
    if with_note {
        let k = rng.gen_range(2..=9);
        let _ = writeln!(s, "  const nk, {k}");
        let _ = writeln!(s, "  mul nv, t, nk");
        let _ = writeln!(s, "  addr pnote, msg.note");
        let _ = writeln!(s, "  store pnote, nv");
    }
    let _ = writeln!(s, "  load tg, ptag");
    let cases: Vec<String> = variants
        .iter()
        .enumerate()
        .map(|(i, v)| format!("{}: v{i}", v.tag))
        .collect();
    let _ = writeln!(s, "  switch tg, [{}], after", cases.join(", "));

    for (i, v) in variants.iter().enumerate() {
        let _ = writeln!(s, "v{i}:");
        for j in 0..v.arity {
            let _ = writeln!(s, "  input x{i}_{j}");
            let mut val = format!("x{i}_{j}");
            if !v.consumed {
                for step in 0..rng.gen_range(0..=2usize) {
                    let op = CHAIN_OPS[rng.gen_range(0..CHAIN_OPS.len())];
                    let k = rng.gen_range(1..=20);
                    let _ = writeln!(s, "  const c{i}_{j}_{step}, {k}");
                    let _ = writeln!(s, "  {op} y{i}_{j}_{step}, {val}, c{i}_{j}_{step}");
                    val = format!("y{i}_{j}_{step}");
                }
            }
            let _ = writeln!(s, "  addr p{i}_{j}, msg.u.v{i}.f{j}");
            let _ = writeln!(s, "  store p{i}_{j}, {val}");
        }
        if with_cache && Some(i) == first_unused {
            let k = rng.gen_range(2..=9);
            let _ = writeln!(s, "  const ck, {k}");
            let _ = writeln!(s, "  mul cv, x{i}_0, ck");
            let _ = writeln!(s, "  addr pcache, cache");
            let _ = writeln!(s, "  store pcache, cv");
        }
        let _ = writeln!(s, "  const sz{i}, {}", v.arity);
        let _ = writeln!(s, "  addr psz{i}, msg.size");
        let _ = writeln!(s, "  store psz{i}, sz{i}");
        let _ = writeln!(s, "  jmp after");
    }
    let _ = writeln!(s, "after:");
    let _ = writeln!(s, "  addr pq, msg.size");
    let _ = writeln!(s, "  load q, pq");
    let _ = writeln!(s, "  addr pp, ptr");
    let _ = writeln!(s, "  load cur, pp");
    let _ = writeln!(s, "  add cur2, cur, q");
    let _ = writeln!(s, "  store pp, cur2");
    let _ = writeln!(s, "  const yes, 1");
    let _ = writeln!(s, "  ret yes");
    let _ = writeln!(s, "}}\n");

    let _ = writeln!(s, "app fn main() {{");
    let _ = writeln!(s, "entry:");
    let _ = writeln!(s, "  jmp loop");
    let _ = writeln!(s, "loop:");
    let _ = writeln!(s, "  call more, readnext()");
    let _ = writeln!(s, "  br more, handle, fin");
    let handled: Vec<usize> = {
        let mut h = consumed_set.clone();
        h.sort_unstable();
        h
    };
    if chain_app {
        let _ = writeln!(s, "handle:");
        let _ = writeln!(s, "  addr ht, msg.tag");
        for (n, &i) in handled.iter().enumerate() {
            if n > 0 {
                let _ = writeln!(s, "chk{n}:");
            }
            let _ = writeln!(s, "  load tv{n}, ht");
            let _ = writeln!(s, "  const hk{n}, {}", variants[i].tag);
            let _ = writeln!(s, "  eq he{n}, tv{n}, hk{n}");
            let miss = if n + 1 < handled.len() {
                format!("chk{}", n + 1)
            } else {
                "next".to_string()
            };
            let _ = writeln!(s, "  br he{n}, h{i}, {miss}");
        }
    } else {
        let _ = writeln!(s, "handle:");
        let _ = writeln!(s, "  addr ht, msg.tag");
        let _ = writeln!(s, "  load tv, ht");
        let hcases: Vec<String> = handled
            .iter()
            .map(|&i| format!("{}: h{i}", variants[i].tag))
            .collect();
        let _ = writeln!(s, "  switch tv, [{}], next", hcases.join(", "));
    }
    for (n, &i) in handled.iter().enumerate() {
        let _ = writeln!(s, "h{i}:");
        if app_reads_acc && n == 0 {
            let _ = writeln!(s, "  addr ha, msg.acc");
            let _ = writeln!(s, "  load av, ha");
            let _ = writeln!(s, "  output av");
        }
        for j in 0..variants[i].arity {
            let _ = writeln!(s, "  addr hp{i}_{j}, msg.u.v{i}.f{j}");
            let _ = writeln!(s, "  load hv{i}_{j}, hp{i}_{j}");
            let _ = writeln!(s, "  output hv{i}_{j}");
        }
        let _ = writeln!(s, "  jmp next");
    }
    let _ = writeln!(s, "next:");
    let _ = writeln!(s, "  jmp loop");
    let _ = writeln!(s, "fin:");
    let _ = writeln!(s, "  ret");
    let _ = writeln!(s, "}}");

    crate::load_module(&s).unwrap_or_else(|e| panic!("generated module must load: {e}\n{s}"))
}

/// Builds a single-function module whose control-flow graph is a random
/// acyclic graph: every edge goes to a higher block index and every block
/// is reachable, so complete-path enumeration over it terminates.
///
/// All registers are defined in the entry block, which keeps every later
/// use verifier-clean regardless of which paths exist.
pub fn random_cfg(seed: u64) -> Module {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nblocks = rng.gen_range(2..=12usize);
    let nregs = rng.gen_range(2..=4usize);

    let mut children: Vec<Vec<usize>> = vec![Vec::new(); nblocks];
    for i in 1..nblocks {
        let p = rng.gen_range(0..i);
        children[p].push(i);
    }
    for (p, kids) in children.iter_mut().enumerate() {
        if p + 1 < nblocks && kids.len() < 3 && rng.gen_bool(0.35) {
            kids.push(rng.gen_range(p + 1..nblocks));
        }
        kids.shuffle(&mut rng);
    }

    let reg = |r: usize| format!("r{r}");
    let mut s = String::new();
    let _ = writeln!(s, "app fn main() {{");
    for b in 0..nblocks {
        let _ = writeln!(s, "b{b}:");
        if b == 0 {
            for r in 0..nregs {
                let _ = writeln!(s, "  const {}, {}", reg(r), rng.gen_range(0..=9));
            }
        }
        for _ in 0..rng.gen_range(0..=3usize) {
            match rng.gen_range(0..4) {
                0 => {
                    let _ = writeln!(
                        s,
                        "  const {}, {}",
                        reg(rng.gen_range(0..nregs)),
                        rng.gen_range(0..=9)
                    );
                }
                1 => {
                    let _ = writeln!(
                        s,
                        "  add {}, {}, {}",
                        reg(rng.gen_range(0..nregs)),
                        reg(rng.gen_range(0..nregs)),
                        reg(rng.gen_range(0..nregs))
                    );
                }
                2 => {
                    let _ = writeln!(
                        s,
                        "  mul {}, {}, {}",
                        reg(rng.gen_range(0..nregs)),
                        reg(rng.gen_range(0..nregs)),
                        reg(rng.gen_range(0..nregs))
                    );
                }
                _ => {
                    let _ = writeln!(s, "  output {}", reg(rng.gen_range(0..nregs)));
                }
            }
        }
        let kids = &children[b];
        match kids.len() {
            0 => {
                let _ = writeln!(s, "  ret");
            }
            1 => {
                let _ = writeln!(s, "  jmp b{}", kids[0]);
            }
            2 => {
                let _ = writeln!(
                    s,
                    "  br {}, b{}, b{}",
                    reg(rng.gen_range(0..nregs)),
                    kids[0],
                    kids[1]
                );
            }
            _ => {
                let cases: Vec<String> = kids[1..]
                    .iter()
                    .enumerate()
                    .map(|(v, k)| format!("{v}: b{k}"))
                    .collect();
                let _ = writeln!(
                    s,
                    "  switch {}, [{}], b{}",
                    reg(rng.gen_range(0..nregs)),
                    cases.join(", "),
                    kids[0]
                );
            }
        }
    }
    let _ = writeln!(s, "}}");
    crate::load_module(&s).unwrap_or_else(|e| panic!("generated cfg must load: {e}\n{s}"))
}

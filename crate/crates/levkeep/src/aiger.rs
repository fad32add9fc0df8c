//! AIGER reader and writer, combinational subset.
//!
//! Both the ASCII (`aag`) and the binary (`aig`) flavor are supported in
//! both directions.  Latches are rejected.  Symbol-table entries for inputs
//! and outputs survive a round trip; comment sections are dropped.
//!
//! Reading always produces a structurally hashed graph: duplicate AND
//! definitions collapse and constant fanins fold, so the in-memory node
//! count can be smaller than the file's `A` field.  Writing renumbers the
//! alive nodes into the compact topological numbering the binary format
//! demands (every left-hand side exceeds its right-hand sides), and emits
//! the same numbering for ASCII output, so a given graph always serializes
//! to identical bytes.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use crate::aig::{AigGraph, Edge, NodeId};
use crate::error::{Error, Result};
use crate::verify::topo_order;

/// Names attached to primary inputs and outputs, by position.  Sparse:
/// unnamed entries simply have no pair.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Symbols {
    pub inputs: Vec<(u32, String)>,
    pub outputs: Vec<(u32, String)>,
}

impl Symbols {
    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty() && self.outputs.is_empty()
    }
}

// ---------------------------------------------------------------- reading

struct Cursor<'a> {
    b: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, at: usize, msg: impl Into<String>) -> Error {
        Error::AigerParse { offset: at, msg: msg.into() }
    }

    fn eof(&self) -> bool {
        self.pos >= self.b.len()
    }

    fn read_byte(&mut self, what: &str) -> Result<u8> {
        if self.eof() {
            return Err(self.err(self.pos, format!("unexpected end of file in {what}")));
        }
        let v = self.b[self.pos];
        self.pos += 1;
        Ok(v)
    }

    /// Next line without its terminator; returns the line's start offset too.
    fn read_line(&mut self, what: &str) -> Result<(usize, &'a str)> {
        if self.eof() {
            return Err(self.err(self.pos, format!("unexpected end of file, expected {what}")));
        }
        let start = self.pos;
        let end = self.b[start..]
            .iter()
            .position(|&c| c == b'\n')
            .map(|i| start + i)
            .unwrap_or(self.b.len());
        let line = std::str::from_utf8(&self.b[start..end])
            .map_err(|_| self.err(start, format!("non-utf8 bytes in {what}")))?;
        self.pos = end + 1;
        Ok((start, line.trim_end_matches('\r')))
    }
}

fn parse_lit(tok: &str, max_var: u64, at: usize, c: &Cursor) -> Result<u64> {
    let v: u64 = tok
        .parse()
        .map_err(|_| c.err(at, format!("invalid literal {tok:?}")))?;
    if v / 2 > max_var {
        return Err(c.err(at, format!("literal {v} exceeds maximum variable {max_var}")));
    }
    Ok(v)
}

/// Header fields of either flavor.
struct Header {
    binary: bool,
    m: u64,
    i: u64,
    o: u64,
    a: u64,
}

fn parse_header(c: &mut Cursor) -> Result<Header> {
    let (at, line) = c.read_line("header")?;
    let mut toks = line.split_ascii_whitespace();
    let magic = toks.next().unwrap_or("");
    let binary = match magic {
        "aag" => false,
        "aig" => true,
        _ => return Err(c.err(at, format!("bad magic {magic:?}, expected \"aag\" or \"aig\""))),
    };
    let mut field = |name: &str| -> Result<u64> {
        toks.next()
            .ok_or_else(|| c.err(at, format!("header missing field {name}")))?
            .parse()
            .map_err(|_| c.err(at, format!("invalid header field {name}")))
    };
    let m = field("M")?;
    let i = field("I")?;
    let l = field("L")?;
    let o = field("O")?;
    let a = field("A")?;
    if toks.next().is_some() {
        return Err(c.err(at, "trailing tokens in header"));
    }
    if l != 0 {
        return Err(Error::AigerUnsupported(format!("{l} latches (combinational only)")));
    }
    if i + a > m {
        return Err(c.err(at, format!("header claims I + A = {} variables but M = {m}", i + a)));
    }
    if m >= (1 << 31) {
        return Err(Error::AigerUnsupported(format!("{m} variables (too large)")));
    }
    Ok(Header { binary, m, i, o, a })
}

/// Reads either AIGER flavor, sniffed from the magic.
pub fn read_aiger(bytes: &[u8]) -> Result<(AigGraph, Symbols)> {
    let mut c = Cursor { b: bytes, pos: 0 };
    let h = parse_header(&mut c)?;
    if h.binary {
        read_binary_body(&mut c, &h)
    } else {
        read_ascii_body(&mut c, &h)
    }
}

/// What an ASCII variable stands for before it is resolved to an edge.
enum VarDef {
    Input(u32),
    And(u64, u64),
}

fn read_ascii_body(c: &mut Cursor, h: &Header) -> Result<(AigGraph, Symbols)> {
    let mut defs: HashMap<u64, VarDef> = HashMap::new();
    let mut def_at: HashMap<u64, usize> = HashMap::new();

    for k in 0..h.i {
        let (at, line) = c.read_line("an input literal")?;
        let lit = parse_lit(line.trim(), h.m, at, c)?;
        if lit < 2 || lit & 1 == 1 {
            return Err(c.err(at, format!("input literal {lit} must be even and non-constant")));
        }
        if defs.insert(lit / 2, VarDef::Input(k as u32)).is_some() {
            return Err(c.err(at, format!("variable {} defined twice", lit / 2)));
        }
        def_at.insert(lit / 2, at);
    }

    let mut out_lits = Vec::with_capacity(h.o as usize);
    for _ in 0..h.o {
        let (at, line) = c.read_line("an output literal")?;
        out_lits.push((at, parse_lit(line.trim(), h.m, at, c)?));
    }

    for _ in 0..h.a {
        let (at, line) = c.read_line("an and definition")?;
        let mut toks = line.split_ascii_whitespace();
        let mut next = |what: &str| -> Result<u64> {
            let tok = toks
                .next()
                .ok_or_else(|| c.err(at, format!("and definition missing {what}")))?;
            parse_lit(tok, h.m, at, c)
        };
        let lhs = next("lhs")?;
        let rhs0 = next("rhs0")?;
        let rhs1 = next("rhs1")?;
        if toks.next().is_some() {
            return Err(c.err(at, "trailing tokens in and definition"));
        }
        if lhs & 1 == 1 || lhs < 2 {
            return Err(c.err(at, format!("and lhs {lhs} must be an even non-constant literal")));
        }
        if defs.insert(lhs / 2, VarDef::And(rhs0, rhs1)).is_some() {
            return Err(c.err(at, format!("variable {} defined twice", lhs / 2)));
        }
        def_at.insert(lhs / 2, at);
    }

    let mut g = AigGraph::new(h.i as u32);
    let mut resolved: HashMap<u64, Edge> = HashMap::new();

    // Materialize every definition, not only those the outputs reach:
    // dangling nodes are part of the file.  Ascending variable order keeps
    // creation order equal to file order for files we wrote ourselves, so
    // write -> read -> write is byte-stable.
    let mut and_vars: Vec<u64> = defs
        .iter()
        .filter_map(|(v, d)| matches!(d, VarDef::And(..)).then_some(*v))
        .collect();
    and_vars.sort_unstable();
    for v in and_vars {
        let at = def_at[&v];
        resolve_lit(&mut g, 2 * v, &defs, &def_at, &mut resolved, c, at)?;
    }

    let mut out_edges = Vec::with_capacity(out_lits.len());
    for &(at, lit) in &out_lits {
        let e = resolve_lit(&mut g, lit, &defs, &def_at, &mut resolved, c, at)?;
        out_edges.push(e);
    }
    for e in out_edges {
        g.add_po(e);
    }

    let syms = read_trailer(c, h)?;
    Ok((g, syms))
}

/// Resolves an ASCII literal to an edge, building AND nodes on demand.
/// Iterative so arbitrarily deep chains cannot overflow the stack; an
/// in-progress marker catches cyclic definitions.
fn resolve_lit(
    g: &mut AigGraph,
    lit: u64,
    defs: &HashMap<u64, VarDef>,
    def_at: &HashMap<u64, usize>,
    resolved: &mut HashMap<u64, Edge>,
    c: &Cursor,
    use_at: usize,
) -> Result<Edge> {
    let root = lit / 2;
    if root != 0 && !defs.contains_key(&root) {
        return Err(c.err(use_at, format!("literal {lit} references undefined variable {root}")));
    }

    let mut stack = vec![root];
    let mut in_progress: HashSet<u64> = HashSet::new();
    while let Some(&v) = stack.last() {
        if v == 0 || resolved.contains_key(&v) {
            stack.pop();
            in_progress.remove(&v);
            continue;
        }
        let at = *def_at.get(&v).unwrap_or(&use_at);
        match defs.get(&v) {
            None => return Err(c.err(at, format!("undefined variable {v}"))),
            Some(VarDef::Input(k)) => {
                resolved.insert(v, Edge::new(g.input(*k), false));
                stack.pop();
            }
            Some(VarDef::And(r0, r1)) => {
                let mut ready = true;
                for r in [r0, r1] {
                    let rv = r / 2;
                    if rv != 0 && !resolved.contains_key(&rv) {
                        if in_progress.contains(&rv) {
                            return Err(c.err(at, format!("cyclic and definition at variable {v}")));
                        }
                        if !defs.contains_key(&rv) {
                            return Err(c.err(at, format!("undefined variable {rv}")));
                        }
                        stack.push(rv);
                        ready = false;
                    }
                }
                if ready {
                    let f0 = edge_of(*r0, resolved);
                    let f1 = edge_of(*r1, resolved);
                    let e = g.add_and(f0, f1);
                    resolved.insert(v, e);
                    stack.pop();
                    in_progress.remove(&v);
                } else {
                    in_progress.insert(v);
                }
            }
        }
    }
    Ok(edge_of(lit, resolved))
}

fn edge_of(lit: u64, resolved: &HashMap<u64, Edge>) -> Edge {
    let base = if lit / 2 == 0 {
        Edge::constant(false)
    } else {
        resolved[&(lit / 2)]
    };
    if lit & 1 == 1 {
        base.complement()
    } else {
        base
    }
}

fn read_varint(c: &mut Cursor) -> Result<u64> {
    let mut x = 0u64;
    let mut shift = 0u32;
    loop {
        let byte = c.read_byte("delta encoding")?;
        x |= u64::from(byte & 0x7f) << shift;
        if byte & 0x80 == 0 {
            return Ok(x);
        }
        shift += 7;
        if shift > 63 {
            return Err(c.err(c.pos, "delta value does not fit in 64 bits"));
        }
    }
}

fn read_binary_body(c: &mut Cursor, h: &Header) -> Result<(AigGraph, Symbols)> {
    // Binary numbering is fixed: inputs are variables 1..=I, and the i-th
    // and definition (0-based) defines variable I + 1 + i.
    let mut out_lits = Vec::with_capacity(h.o as usize);
    for _ in 0..h.o {
        let (at, line) = c.read_line("an output literal")?;
        out_lits.push(parse_lit(line.trim(), h.m, at, c)?);
    }

    let mut g = AigGraph::new(h.i as u32);
    let mut edges: Vec<Edge> = Vec::with_capacity(h.i as usize + h.a as usize + 1);
    edges.push(Edge::constant(false));
    for k in 0..h.i {
        edges.push(Edge::new(g.input(k as u32), false));
    }
    for i in 0..h.a {
        let at = c.pos;
        let lhs = 2 * (h.i + 1 + i);
        let d0 = read_varint(c)?;
        let d1 = read_varint(c)?;
        let rhs0 = lhs
            .checked_sub(d0)
            .ok_or_else(|| c.err(at, format!("delta {d0} underflows lhs {lhs}")))?;
        let rhs1 = rhs0
            .checked_sub(d1)
            .ok_or_else(|| c.err(at, format!("delta {d1} underflows rhs0 {rhs0}")))?;
        let f0 = lit_to_edge(rhs0, &edges, c, at)?;
        let f1 = lit_to_edge(rhs1, &edges, c, at)?;
        edges.push(g.add_and(f0, f1));
    }

    let mut out_edges = Vec::with_capacity(out_lits.len());
    for &lit in &out_lits {
        out_edges.push(lit_to_edge(lit, &edges, c, c.pos)?);
    }
    for e in out_edges {
        g.add_po(e);
    }

    let syms = read_trailer(c, h)?;
    Ok((g, syms))
}

fn lit_to_edge(lit: u64, edges: &[Edge], c: &Cursor, at: usize) -> Result<Edge> {
    let var = (lit / 2) as usize;
    if var >= edges.len() {
        return Err(c.err(at, format!("literal {lit} references variable {var} defined later")));
    }
    let e = edges[var];
    Ok(if lit & 1 == 1 { e.complement() } else { e })
}

/// Symbol table and optional comment section.  Unknown symbol prefixes are
/// rejected; everything after a lone `c` line is discarded.
fn read_trailer(c: &mut Cursor, h: &Header) -> Result<Symbols> {
    let mut syms = Symbols::default();
    while !c.eof() {
        let (at, line) = c.read_line("a symbol or comment line")?;
        if line == "c" {
            break;
        }
        if line.is_empty() {
            continue;
        }
        let (kind, rest) = line.split_at(1);
        let mut parts = rest.splitn(2, ' ');
        let idx: u32 = parts
            .next()
            .unwrap_or("")
            .parse()
            .map_err(|_| c.err(at, format!("invalid symbol position in {line:?}")))?;
        let name = parts
            .next()
            .ok_or_else(|| c.err(at, format!("symbol line {line:?} missing a name")))?;
        match kind {
            "i" if u64::from(idx) < h.i => syms.inputs.push((idx, name.to_string())),
            "o" if u64::from(idx) < h.o => syms.outputs.push((idx, name.to_string())),
            "i" | "o" => return Err(c.err(at, format!("symbol position {idx} out of range"))),
            _ => return Err(c.err(at, format!("unsupported symbol kind {kind:?}"))),
        }
    }
    Ok(syms)
}

// ---------------------------------------------------------------- writing

/// Literal for every node under compact topological renumbering.
fn number_nodes(g: &AigGraph, order: &[NodeId]) -> Vec<u32> {
    let mut lit_of = vec![u32::MAX; g.node_count()];
    lit_of[NodeId::CONST.index()] = 0;
    for (k, n) in g.inputs().enumerate() {
        lit_of[n.index()] = 2 * (k as u32 + 1);
    }
    let base = g.num_inputs() + 1;
    for (j, &n) in order.iter().enumerate() {
        lit_of[n.index()] = 2 * (base + j as u32);
    }
    lit_of
}

fn edge_lit(e: Edge, lit_of: &[u32]) -> u32 {
    let base = lit_of[e.target.index()];
    debug_assert_ne!(base, u32::MAX, "edge to an unnumbered node");
    base | u32::from(e.complemented)
}

/// Right-hand sides with the binary format's `rhs0 >= rhs1` convention.
fn and_rhs(g: &AigGraph, n: NodeId, lit_of: &[u32]) -> (u32, u32) {
    let (f0, f1) = g.fanins(n).expect("and node");
    let a = edge_lit(f0, lit_of);
    let b = edge_lit(f1, lit_of);
    (a.max(b), a.min(b))
}

fn push_symbols(out: &mut Vec<u8>, syms: &Symbols) {
    let mut by_pos: Vec<(char, u32, &str)> = syms
        .inputs
        .iter()
        .map(|(i, s)| ('i', *i, s.as_str()))
        .chain(syms.outputs.iter().map(|(o, s)| ('o', *o, s.as_str())))
        .collect();
    by_pos.sort_by_key(|&(k, p, _)| (k, p));
    for (kind, pos, name) in by_pos {
        out.extend_from_slice(format!("{kind}{pos} {name}\n").as_bytes());
    }
}

/// Serializes to the ASCII (`aag`) flavor.
pub fn write_ascii(g: &AigGraph, syms: &Symbols) -> Vec<u8> {
    let order = topo_order(g);
    let lit_of = number_nodes(g, &order);
    let i = g.num_inputs();
    let a = order.len() as u32;
    let mut out = Vec::new();
    out.extend_from_slice(
        format!("aag {} {} 0 {} {}\n", i + a, i, g.outputs().len(), a).as_bytes(),
    );
    for k in 0..i {
        out.extend_from_slice(format!("{}\n", 2 * (k + 1)).as_bytes());
    }
    for &po in g.outputs() {
        out.extend_from_slice(format!("{}\n", edge_lit(po, &lit_of)).as_bytes());
    }
    for &n in &order {
        let (r0, r1) = and_rhs(g, n, &lit_of);
        out.extend_from_slice(format!("{} {} {}\n", lit_of[n.index()], r0, r1).as_bytes());
    }
    push_symbols(&mut out, syms);
    out
}

fn push_varint(out: &mut Vec<u8>, mut x: u32) {
    loop {
        let b = (x & 0x7f) as u8;
        x >>= 7;
        if x == 0 {
            out.push(b);
            break;
        }
        out.push(b | 0x80);
    }
}

/// Serializes to the binary (`aig`) flavor.
pub fn write_binary(g: &AigGraph, syms: &Symbols) -> Vec<u8> {
    let order = topo_order(g);
    let lit_of = number_nodes(g, &order);
    let i = g.num_inputs();
    let a = order.len() as u32;
    let mut out = Vec::new();
    out.extend_from_slice(
        format!("aig {} {} 0 {} {}\n", i + a, i, g.outputs().len(), a).as_bytes(),
    );
    for &po in g.outputs() {
        out.extend_from_slice(format!("{}\n", edge_lit(po, &lit_of)).as_bytes());
    }
    for &n in &order {
        // Topological numbering guarantees lhs > rhs0 >= rhs1.
        let lhs = lit_of[n.index()];
        let (r0, r1) = and_rhs(g, n, &lit_of);
        push_varint(&mut out, lhs - r0);
        push_varint(&mut out, r0 - r1);
    }
    push_symbols(&mut out, syms);
    out
}

/// Reads a file in either flavor, sniffed from the magic bytes.
pub fn read_aiger_file(path: impl AsRef<Path>) -> Result<(AigGraph, Symbols)> {
    let bytes = std::fs::read(path)?;
    read_aiger(&bytes)
}

/// Writes `g` to `path`; a `.aag` extension selects ASCII, anything else
/// gets the binary flavor.
pub fn write_aiger_file(path: impl AsRef<Path>, g: &AigGraph, syms: &Symbols) -> Result<()> {
    let path = path.as_ref();
    let ascii = path.extension().is_some_and(|e| e == "aag");
    let bytes = if ascii { write_ascii(g, syms) } else { write_binary(g, syms) };
    std::fs::write(path, bytes)?;
    Ok(())
}

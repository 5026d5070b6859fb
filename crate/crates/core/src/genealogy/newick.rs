use super::{Genealogy, SamplingEvent, ValidatedGenealogy};
use crate::error::{Error, Result};

/// Leaves whose times differ by less than this merge into one sampling event.
pub const DEFAULT_TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug)]
struct Node {
    children: Vec<usize>,
    length: f64,
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    nodes: Vec<Node>,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        loop {
            match self.src.get(self.pos) {
                Some(c) if c.is_ascii_whitespace() => self.pos += 1,
                Some(b'[') => {
                    // comment
                    while let Some(&c) = self.src.get(self.pos) {
                        self.pos += 1;
                        if c == b']' {
                            break;
                        }
                    }
                }
                _ => break,
            }
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn label(&mut self) -> Result<()> {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&b'\'') {
            self.pos += 1;
            loop {
                match self.src.get(self.pos) {
                    None => return Err(self.err("unterminated quoted label")),
                    Some(b'\'') => {
                        self.pos += 1;
                        if self.src.get(self.pos) == Some(&b'\'') {
                            self.pos += 1;
                        } else {
                            return Ok(());
                        }
                    }
                    Some(_) => self.pos += 1,
                }
            }
        }
        while let Some(&c) = self.src.get(self.pos) {
            if matches!(c, b'(' | b')' | b',' | b':' | b';' | b'[') || c.is_ascii_whitespace() {
                break;
            }
            self.pos += 1;
        }
        Ok(())
    }

    fn length(&mut self) -> Result<f64> {
        if self.peek() != Some(b':') {
            return Ok(0.0);
        }
        self.pos += 1;
        self.skip_ws();
        let start = self.pos;
        while let Some(&c) = self.src.get(self.pos) {
            if c.is_ascii_digit() || matches!(c, b'.' | b'-' | b'+' | b'e' | b'E') {
                self.pos += 1;
            } else {
                break;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        let v: f64 = text
            .parse()
            .map_err(|_| self.err(format!("bad branch length '{text}'")))?;
        if !v.is_finite() {
            return Err(self.err("non-finite branch length"));
        }
        if v < 0.0 {
            return Err(Error::NegativeBranch(v));
        }
        Ok(v)
    }

    fn subtree(&mut self) -> Result<usize> {
        let mut children = Vec::new();
        if self.peek() == Some(b'(') {
            self.pos += 1;
            loop {
                children.push(self.subtree()?);
                match self.peek() {
                    Some(b',') => self.pos += 1,
                    Some(b')') => {
                        self.pos += 1;
                        break;
                    }
                    _ => return Err(self.err("expected ',' or ')'")),
                }
            }
        }
        self.label()?;
        let length = self.length()?;
        if children.len() > 2 {
            return Err(Error::Polytomy(children.len()));
        }
        if children.len() == 1 {
            return Err(Error::Polytomy(1));
        }
        self.nodes.push(Node { children, length });
        Ok(self.nodes.len() - 1)
    }
}

pub fn parse_newick(text: &str) -> Result<Genealogy> {
    parse_newick_with_tolerance(text, DEFAULT_TIE_TOLERANCE)
}

/// Parse a rooted binary Newick tree into event times.
///
/// Node heights are measured back from the deepest tip, so the most recent
/// leaf lands at time 0.
pub fn parse_newick_with_tolerance(text: &str, tolerance: f64) -> Result<Genealogy> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        nodes: Vec::new(),
    };
    let root = p.subtree()?;
    if p.peek() != Some(b';') {
        return Err(p.err("expected ';'"));
    }
    p.pos += 1;
    if p.peek().is_some() {
        return Err(p.err("trailing input after ';'"));
    }
    if p.nodes[root].children.is_empty() {
        return Err(p.err("tree has a single leaf"));
    }

    // depth from the root, iteratively
    let mut depth = vec![0.0; p.nodes.len()];
    let mut stack = vec![root];
    while let Some(i) = stack.pop() {
        for &c in &p.nodes[i].children {
            depth[c] = depth[i] + p.nodes[c].length;
            stack.push(c);
        }
    }
    let max_depth = p
        .nodes
        .iter()
        .zip(&depth)
        .filter(|(n, _)| n.children.is_empty())
        .map(|(_, &d)| d)
        .fold(f64::NEG_INFINITY, f64::max);

    let mut leaf_times = Vec::new();
    let mut coal = Vec::new();
    for (n, &d) in p.nodes.iter().zip(&depth) {
        let t = (max_depth - d).max(0.0);
        if n.children.is_empty() {
            leaf_times.push(t);
        } else {
            coal.push(t);
        }
    }
    leaf_times.sort_by(f64::total_cmp);
    coal.sort_by(f64::total_cmp);

    let mut sampling: Vec<SamplingEvent> = Vec::new();
    let mut anchor = f64::NEG_INFINITY;
    for t in leaf_times {
        match sampling.last_mut() {
            Some(last) if t - anchor <= tolerance => last.count += 1,
            _ => {
                anchor = t;
                sampling.push(SamplingEvent::new(t, 1));
            }
        }
    }
    sampling[0].time = 0.0;
    Ok(Genealogy::new(coal, sampling))
}

/// Render a genealogy as a Newick string with a ladder-like topology that
/// reproduces its event times. Leaves are named `s<j>_<i>`.
pub fn to_newick(g: &ValidatedGenealogy) -> String {
    let mut active: Vec<(String, f64)> = Vec::new();
    let samples = g.sampling();
    let coal = g.coalescent_times();
    let (mut i, mut j) = (0, 0);
    while i < samples.len() || j < coal.len() {
        let sample_next = match (samples.get(i), coal.get(j)) {
            (Some(s), Some(&t)) => s.time <= t,
            (Some(_), None) => true,
            _ => false,
        };
        if sample_next {
            let s = samples[i];
            for k in 0..s.count {
                active.push((format!("s{}_{}", i, k), s.time));
            }
            i += 1;
        } else {
            let t = coal[j];
            let (b, tb) = active.pop().expect("validated");
            let (a, ta) = active.pop().expect("validated");
            active.push((format!("({}:{},{}:{})", a, t - ta, b, t - tb), t));
            j += 1;
        }
    }
    format!("{};", active.pop().expect("validated").0)
}

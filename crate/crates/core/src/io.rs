//! Trace files: a CSV of recorded iterations plus a `key=value` sidecar.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::samplers::{Trace, TraceRow};

/// Header fields before the `f` columns.
pub const TRACE_PREFIX: [&str; 6] = ["iter", "accept", "loglik", "logpost", "cpu_s", "tau"];

/// Writes `iter,accept,loglik,logpost,cpu_s,tau,f_1,...`. `tau` is the last
/// entry of `theta`.
pub fn write_trace_csv<W: Write>(trace: &Trace, mut w: W) -> Result<()> {
    let nf = trace.dim().saturating_sub(1);
    let mut header = TRACE_PREFIX.join(",");
    for j in 1..=nf {
        header.push_str(&format!(",f_{j}"));
    }
    writeln!(w, "{header}")?;
    let mut line = String::new();
    for r in &trace.rows {
        line.clear();
        line.push_str(&format!(
            "{},{},{},{},{},{}",
            r.iter,
            r.accepted as u8,
            r.log_likelihood,
            r.log_posterior,
            r.cpu_seconds,
            r.theta[nf]
        ));
        for v in &r.theta[..nf] {
            line.push(',');
            line.push_str(&v.to_string());
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Reads a trace CSV. Every row is treated as post-burn-in unless `burnin`
/// says otherwise.
pub fn read_trace_csv<R: BufRead>(r: R, sampler: &str, burnin: Option<usize>) -> Result<Trace> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Trace("empty trace file".into()))??;
    let cols: Vec<&str> = header.trim().split(',').collect();
    if cols.len() < TRACE_PREFIX.len() || cols[..TRACE_PREFIX.len()] != TRACE_PREFIX {
        return Err(Error::Trace(format!("unexpected header '{header}'")));
    }
    let nf = cols.len() - TRACE_PREFIX.len();
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |what: &str| Error::Trace(format!("line {}: bad {what}", k + 2));
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != cols.len() {
            return Err(bad("field count"));
        }
        let num = |i: usize| -> Result<f64> { fields[i].parse::<f64>().map_err(|_| bad(cols[i])) };
        let iter = fields[0].parse::<usize>().map_err(|_| bad("iter"))?;
        let accepted = match fields[1] {
            "1" => true,
            "0" => false,
            _ => return Err(bad("accept")),
        };
        let mut theta = Vec::with_capacity(nf + 1);
        for i in 0..nf {
            theta.push(num(TRACE_PREFIX.len() + i)?);
        }
        theta.push(num(5)?);
        rows.push(TraceRow {
            iter,
            accepted,
            log_likelihood: num(2)?,
            log_posterior: num(3)?,
            cpu_seconds: num(4)?,
            theta,
        });
    }
    if rows.windows(2).any(|w| w[1].cpu_seconds < w[0].cpu_seconds || w[1].iter <= w[0].iter) {
        return Err(Error::Trace("iterations or CPU times decrease".into()));
    }
    let burnin = burnin.unwrap_or_else(|| rows.first().map_or(0, |r| r.iter));
    let thin = match rows.as_slice() {
        [a, b, ..] => b.iter - a.iter,
        _ => 1,
    };
    Ok(Trace {
        sampler: sampler.to_string(),
        burnin,
        thin,
        rows,
        divergences: 0,
        stalls: 0,
        step_size: None,
        config: None,
        seed: None,
    })
}

/// Ordered `key=value` metadata.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Meta {
    entries: Vec<(String, String)>,
}

impl Meta {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets `key`, replacing an existing value in place.
    pub fn set<V: ToString>(&mut self, key: &str, value: V) -> &mut Self {
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Parsed value of `key`; missing keys are an error.
    pub fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let v = self
            .get(key)
            .ok_or_else(|| Error::Trace(format!("metadata lacks '{key}'")))?;
        v.parse()
            .map_err(|_| Error::Trace(format!("metadata '{key}' has bad value '{v}'")))
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        for (k, v) in &self.entries {
            writeln!(w, "{k}={v}")?;
        }
        Ok(())
    }

    /// Parses `key=value` lines; blank lines and `#` comments are skipped.
    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut m = Meta::new();
        for line in r.lines() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let (k, v) = t
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key=value, got '{t}'")))?;
            m.set(k.trim(), v.trim());
        }
        Ok(m)
    }

    pub fn to_map(&self) -> BTreeMap<String, String> {
        self.entries.iter().cloned().collect()
    }
}

/// Sidecar path: the trace path with its extension replaced by `meta`.
pub fn meta_path(trace: &Path) -> PathBuf {
    trace.with_extension("meta")
}

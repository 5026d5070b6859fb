use std::io::{BufRead, Write};

use super::{Genealogy, SamplingEvent};
use crate::error::{Error, Result};

pub const FORMAT_HEADER: &str = "phylocoal-genealogy v1";

pub fn write_genealogy<W: Write>(mut w: W, g: &Genealogy) -> Result<()> {
    writeln!(w, "{FORMAT_HEADER}")?;
    let coal: Vec<String> = g.coalescent_times.iter().map(|t| t.to_string()).collect();
    writeln!(w, "coalescent: {}", coal.join(" "))?;
    let samp: Vec<String> = g
        .sampling
        .iter()
        .map(|s| format!("{}:{}", s.time, s.count))
        .collect();
    writeln!(w, "sampling: {}", samp.join(" "))?;
    Ok(())
}

/// Read the line-oriented genealogy format. Blank lines and `#` comments
/// are ignored. The result is not validated.
pub fn read_genealogy<R: BufRead>(r: R) -> Result<Genealogy> {
    let mut header = false;
    let mut coal = None;
    let mut samp = None;
    for line in r.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header {
            if line != FORMAT_HEADER {
                return Err(Error::Format(format!("expected header '{FORMAT_HEADER}'")));
            }
            header = true;
            continue;
        }
        if let Some(rest) = line.strip_prefix("coalescent:") {
            let v = rest
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| Error::Format(format!("bad coalescent time '{t}'")))
                })
                .collect::<Result<Vec<_>>>()?;
            coal = Some(v);
        } else if let Some(rest) = line.strip_prefix("sampling:") {
            let v = rest
                .split_whitespace()
                .map(|tok| {
                    let (t, n) = tok
                        .split_once(':')
                        .ok_or_else(|| Error::Format(format!("bad sampling entry '{tok}'")))?;
                    let time = t
                        .parse::<f64>()
                        .map_err(|_| Error::Format(format!("bad sampling time '{t}'")))?;
                    let count = n
                        .parse::<usize>()
                        .map_err(|_| Error::Format(format!("bad sampling count '{n}'")))?;
                    Ok(SamplingEvent::new(time, count))
                })
                .collect::<Result<Vec<_>>>()?;
            samp = Some(v);
        } else {
            return Err(Error::Format(format!("unrecognized line '{line}'")));
        }
    }
    if !header {
        return Err(Error::Format("empty input".into()));
    }
    let coal = coal.ok_or_else(|| Error::Format("missing 'coalescent:' line".into()))?;
    let samp = samp.ok_or_else(|| Error::Format("missing 'sampling:' line".into()))?;
    Ok(Genealogy::new(coal, samp))
}

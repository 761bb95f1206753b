//! Declarative system files.
//!
//! ```text
//! # identity on three points
//! explicit "ID3" {
//!   map = 0 1 2
//!   metric 3
//!   0 1 1/1
//!   0 2 1/1
//!   1 2 1/1
//! }
//! measure { weights = 1/1 0/1 0/1 }
//! ```
//!
//! Exactly one system stanza (`explicit`, `lattice`, `shift`, `example512`)
//! per file, optionally followed by `measure` and `probe` stanzas. Bodies are
//! `key = value` lines (or `;`-separated on one line); `explicit` ends with an
//! embedded `metric n` table.

use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::example512::{build_example512, E512Point, Example512System};
use crate::measures::WeightedMeasure;
use crate::metric::{strip_comment, FiniteMetricSpace};
use crate::rational::Rational;
use crate::shift::{EpPoint, ShiftSystem};
use crate::systems::{build_explicit, build_lattice, FiniteSystem, LatticeMap, LatticeSpec};

#[derive(Debug, Clone)]
pub enum SystemDef {
    Finite(FiniteSystem),
    Shift(ShiftSystem),
    Example512(Example512System),
}

impl SystemDef {
    pub fn kind(&self) -> &'static str {
        match self {
            SystemDef::Finite(_) => "finite",
            SystemDef::Shift(_) => "shift",
            SystemDef::Example512(_) => "example512",
        }
    }

    pub fn as_finite(&self) -> Result<&FiniteSystem> {
        match self {
            SystemDef::Finite(f) => Ok(f),
            other => Err(Error::Unsupported(format!("{} systems are not finite", other.kind()))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SystemFile {
    pub system: SystemDef,
    pub measure: Option<WeightedMeasure>,
    /// Finite probe subset from a `probe` stanza on a finite system.
    pub probes: Option<Vec<usize>>,
    /// SHA-256 of the file contents, hex.
    pub digest: String,
}

pub fn digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

struct Stanza {
    kind: String,
    name: Option<String>,
    line: usize,
    keys: BTreeMap<String, (usize, String)>,
    /// Embedded `metric n` block: first line number and text.
    metric: Option<(usize, String)>,
}

impl Stanza {
    fn get(&self, key: &str) -> Result<(usize, &str)> {
        self.keys.get(key).map(|(l, v)| (*l, v.as_str())).ok_or_else(|| Error::Parse {
            line: self.line,
            message: format!("`{}` stanza needs `{key} =`", self.kind),
        })
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        for (k, (line, _)) in &self.keys {
            if !allowed.contains(&k.as_str()) {
                return Err(Error::Parse { line: *line, message: format!("unknown key `{k}` in `{}`", self.kind) });
            }
        }
        Ok(())
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn parse_num<T: std::str::FromStr>(line: usize, what: &str, s: &str) -> Result<T> {
    s.trim().parse().map_err(|_| parse_err(line, format!("bad {what} `{}`", s.trim())))
}

fn parse_header(line: usize, head: &str) -> Result<(String, Option<String>)> {
    let head = head.trim();
    let (kind, rest) = head.split_once(char::is_whitespace).unwrap_or((head, ""));
    let rest = rest.trim();
    let name = if rest.is_empty() {
        None
    } else if rest.len() >= 2 && rest.starts_with('"') && rest.ends_with('"') {
        Some(rest[1..rest.len() - 1].to_string())
    } else {
        return Err(parse_err(line, format!("stanza names must be quoted, found `{rest}`")));
    };
    match kind {
        "explicit" | "lattice" | "shift" | "example512" | "measure" | "probe" => Ok((kind.to_string(), name)),
        _ => Err(parse_err(line, format!("unknown stanza `{kind}`"))),
    }
}

fn add_entry(st: &mut Stanza, line: usize, entry: &str) -> Result<()> {
    let entry = entry.trim();
    if entry.is_empty() {
        return Ok(());
    }
    if let Some((first, text)) = st.metric.as_mut() {
        // Pad skipped lines so table errors report file line numbers.
        while *first + text.matches('\n').count() < line {
            text.push('\n');
        }
        text.push_str(entry);
        text.push('\n');
        return Ok(());
    }
    if entry.starts_with("metric") {
        if st.kind != "explicit" {
            return Err(parse_err(line, "metric tables belong in `explicit` stanzas"));
        }
        st.metric = Some((line, format!("{entry}\n")));
        return Ok(());
    }
    let (k, v) = entry.split_once('=').ok_or_else(|| parse_err(line, format!("expected `key = value`, found `{entry}`")))?;
    let k = k.trim().to_string();
    if st.keys.insert(k.clone(), (line, v.trim().to_string())).is_some() {
        return Err(parse_err(line, format!("key `{k}` given twice")));
    }
    Ok(())
}

fn split_stanzas(text: &str) -> Result<Vec<Stanza>> {
    let mut out = Vec::new();
    let mut open: Option<Stanza> = None;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let mut l = strip_comment(raw).trim();
        if l.is_empty() {
            continue;
        }
        if open.is_none() {
            let (head, rest) = l.split_once('{').ok_or_else(|| parse_err(line, format!("expected a stanza, found `{l}`")))?;
            let (kind, name) = parse_header(line, head)?;
            open = Some(Stanza { kind, name, line, keys: BTreeMap::new(), metric: None });
            l = rest.trim();
        }
        let st = open.as_mut().unwrap();
        let (body, closed) = match l.split_once('}') {
            Some((body, tail)) => {
                if !tail.trim().is_empty() {
                    return Err(parse_err(line, "text after `}`"));
                }
                (body, true)
            }
            None => (l, false),
        };
        if st.metric.is_some() {
            add_entry(st, line, body)?;
        } else {
            for part in body.split(';') {
                add_entry(st, line, part)?;
            }
        }
        if closed {
            out.push(open.take().unwrap());
        }
    }
    if let Some(st) = open {
        return Err(parse_err(st.line, format!("`{}` stanza is never closed", st.kind)));
    }
    Ok(out)
}

fn parse_rationals(line: usize, s: &str) -> Result<Vec<Rational>> {
    s.split_whitespace().map(|w| w.parse::<Rational>().map_err(|e| parse_err(line, e.to_string()))).collect()
}

fn parse_ep(line: usize, s: &str) -> Result<EpPoint> {
    s.parse::<EpPoint>().map_err(|e| parse_err(line, e.to_string()))
}

fn at_line(line: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Parse { .. } => e,
        other => parse_err(line, other.to_string()),
    }
}

fn build_system(st: &Stanza, check_metric: bool) -> Result<SystemDef> {
    let sys = match st.kind.as_str() {
        "explicit" => {
            st.check_keys(&["map", "labels"])?;
            let (ml, map) = st.get("map")?;
            let perm: Vec<usize> = map.split_whitespace().map(|w| parse_num(ml, "map entry", w)).collect::<Result<_>>()?;
            let (line, text) = st.metric.as_ref().ok_or_else(|| parse_err(st.line, "`explicit` needs a `metric n` table"))?;
            let space = FiniteMetricSpace::parse_text(text, *line)?;
            let mut f = if check_metric {
                build_explicit(space, perm)
            } else {
                FiniteSystem::new("explicit", std::sync::Arc::new(space), perm)
            }
            .map_err(at_line(ml))?;
            if let Some((ll, labels)) = st.keys.get("labels") {
                let labels: Vec<String> = labels.split_whitespace().map(str::to_string).collect();
                if labels.len() != f.len() {
                    return Err(parse_err(*ll, format!("{} labels for {} points", labels.len(), f.len())));
                }
                f = f.with_labels(labels);
            }
            SystemDef::Finite(f.named(st.name.clone().unwrap_or_else(|| "explicit".into())))
        }
        "lattice" => {
            st.check_keys(&["n", "map"])?;
            let (nl, n) = st.get("n")?;
            let modulus: usize = parse_num(nl, "modulus", n)?;
            let (ml, map) = st.get("map")?;
            let words: Vec<&str> = map.split_whitespace().collect();
            let map = match words.as_slice() {
                ["rot", k] => LatticeMap::Rotation(parse_num(ml, "rotation", k)?),
                ["mat", a, b, c, d] => LatticeMap::Matrix([
                    parse_num(ml, "matrix entry", a)?,
                    parse_num(ml, "matrix entry", b)?,
                    parse_num(ml, "matrix entry", c)?,
                    parse_num(ml, "matrix entry", d)?,
                ]),
                _ => return Err(parse_err(ml, format!("expected `rot k` or `mat a b c d`, found `{map}`"))),
            };
            let f = build_lattice(&LatticeSpec { modulus, map }).map_err(at_line(ml))?;
            SystemDef::Finite(match &st.name {
                Some(name) => f.named(name.clone()),
                None => f,
            })
        }
        "shift" => {
            st.check_keys(&["alphabet"])?;
            let (al, a) = st.get("alphabet")?;
            let alphabet: u8 = parse_num(al, "alphabet size", a)?;
            SystemDef::Shift(ShiftSystem::with_default_probes(alphabet).map_err(at_line(al))?)
        }
        "example512" => {
            st.check_keys(&["K", "t", "p"])?;
            let (kl, k) = st.get("K")?;
            let k_max: u32 = parse_num(kl, "K", k)?;
            let (tl, t) = st.get("t")?;
            let t: u32 = parse_num(tl, "t", t)?;
            let (pl, p) = st.get("p")?;
            let p = parse_ep(pl, p)?;
            SystemDef::Example512(build_example512(k_max, t, p).map_err(at_line(st.line))?)
        }
        _ => unreachable!("only system stanzas reach here"),
    };
    Ok(sys)
}

pub fn parse_system_file(text: &str) -> Result<SystemFile> {
    parse_with(text, true)
}

/// Like [`parse_system_file`] but keeps explicit tables that fail the metric
/// axioms, so they can be reported rather than rejected.
pub fn parse_system_file_unchecked(text: &str) -> Result<SystemFile> {
    parse_with(text, false)
}

fn parse_with(text: &str, check_metric: bool) -> Result<SystemFile> {
    let stanzas = split_stanzas(text)?;
    let mut systems = stanzas.iter().filter(|s| !matches!(s.kind.as_str(), "measure" | "probe"));
    let st = systems.next().ok_or_else(|| parse_err(1, "no system stanza"))?;
    if let Some(extra) = systems.next() {
        return Err(parse_err(extra.line, "only one system stanza per file"));
    }
    let mut system = build_system(st, check_metric)?;
    let mut measure = None;
    let mut probes = None;
    for st in stanzas.iter().filter(|s| matches!(s.kind.as_str(), "measure" | "probe")) {
        if st.kind == "measure" {
            if measure.is_some() {
                return Err(parse_err(st.line, "only one measure stanza per file"));
            }
            st.check_keys(&["weights", "bernoulli"])?;
            measure = Some(match (&system, st.keys.get("weights"), st.keys.get("bernoulli")) {
                (SystemDef::Finite(f), Some((l, w)), None) => {
                    let w = parse_rationals(*l, w)?;
                    if w.len() != f.len() {
                        return Err(parse_err(*l, format!("{} weights for {} points", w.len(), f.len())));
                    }
                    WeightedMeasure::finite(w).map_err(at_line(*l))?
                }
                (SystemDef::Shift(s), None, Some((l, w))) => {
                    let w = parse_rationals(*l, w)?;
                    if w.len() != s.alphabet() as usize {
                        return Err(parse_err(*l, format!("{} symbol weights for alphabet {}", w.len(), s.alphabet())));
                    }
                    WeightedMeasure::bernoulli(w).map_err(at_line(*l))?
                }
                _ => return Err(parse_err(st.line, format!("{} systems take `weights` (finite) or `bernoulli` (shift)", system.kind()))),
            });
        } else {
            if probes.is_some() {
                return Err(parse_err(st.line, "only one probe stanza per file"));
            }
            st.check_keys(&["points"])?;
            let (pl, pts) = st.get("points")?;
            let words: Vec<&str> = pts.split_whitespace().collect();
            match &mut system {
                SystemDef::Finite(f) => {
                    let pts: Vec<usize> = words.iter().map(|w| parse_num(pl, "point", w)).collect::<Result<_>>()?;
                    if let Some(bad) = pts.iter().find(|&&p| p >= f.len()) {
                        return Err(parse_err(pl, format!("probe {bad} outside {} points", f.len())));
                    }
                    probes = Some(pts);
                }
                SystemDef::Shift(s) => {
                    let pts: Vec<EpPoint> = words.iter().map(|w| parse_ep(pl, w)).collect::<Result<_>>()?;
                    *s = ShiftSystem::new(s.alphabet(), pts).map_err(at_line(pl))?;
                    probes = Some(vec![]);
                }
                SystemDef::Example512(e) => {
                    let pts: Vec<EpPoint> = words.iter().map(|w| parse_ep(pl, w)).collect::<Result<_>>()?;
                    *e = e.clone().with_y_probes(pts).map_err(at_line(pl))?;
                    probes = Some(vec![]);
                }
            }
        }
    }
    let probes = probes.filter(|p| !p.is_empty());
    Ok(SystemFile { system, measure, probes, digest: digest(text.as_bytes()) })
}

pub fn read_text(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Structural(format!("cannot read {}: {e}", path.display())))
}

pub fn load_system_file(path: &std::path::Path) -> Result<SystemFile> {
    parse_system_file(&read_text(path)?)
}

/// Serializes a finite system back into an `explicit` stanza.
pub fn write_explicit(f: &FiniteSystem) -> String {
    let map: Vec<String> = f.map().iter().map(usize::to_string).collect();
    let mut out = format!("explicit \"{}\" {{\n  map = {}\n", f.name(), map.join(" "));
    for l in f.space().to_text().lines() {
        out.push_str("  ");
        out.push_str(l);
        out.push('\n');
    }
    out.push_str("}\n");
    out
}

/// Parses a point of the given system from its label.
pub fn parse_finite_point(f: &FiniteSystem, s: &str) -> Result<usize> {
    if let Ok(i) = s.parse::<usize>() {
        if i < f.len() {
            return Ok(i);
        }
    }
    f.labels().iter().position(|l| l == s).ok_or_else(|| Error::domain(format!("no point `{s}` in {}", f.name())))
}

pub fn parse_e512_point(s: &str) -> Result<E512Point> {
    s.parse::<E512Point>().map_err(|e| Error::domain(e.to_string()))
}

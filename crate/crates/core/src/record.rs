//! Flat text records for seeds and the fixture file format.
//!
//! A seed record is either a JSON object or `key = value` lines with the keys
//! `n, m1, m2, y10, dy20, df0, theta0_p, theta0_q, t0`. `#` starts a comment.
//! Numbers are written in Rust's shortest round-trip form, so
//! `parse_seed(&format_seed(q)) == q` exactly.
//!
//! A fixture file holds one seed per line as whitespace-separated `key=value`
//! tokens, plus an `id` token naming the row.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PiRational, SeedConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlatSeed {
    n: usize,
    m1: f64,
    m2: f64,
    y10: f64,
    dy20: f64,
    df0: f64,
    #[serde(default)]
    theta0_p: Option<i64>,
    #[serde(default)]
    theta0_q: Option<i64>,
    #[serde(default)]
    t0: Option<f64>,
}

impl FlatSeed {
    fn into_seed(self) -> Result<SeedConfig> {
        let theta0 = match (self.theta0_p, self.theta0_q) {
            (Some(p), Some(q)) => Some(PiRational::new(p, q)?),
            (Some(p), None) => Some(PiRational::new(p, 1)?),
            (None, None) => None,
            (None, Some(_)) => return Err(Error::Parse("theta0_q given without theta0_p".into())),
        };
        Ok(SeedConfig {
            n: self.n,
            m1: self.m1,
            m2: self.m2,
            y10: self.y10,
            dy20: self.dy20,
            df0: self.df0,
            theta0,
            t0: self.t0,
        })
    }
}

#[derive(Default)]
struct Fields {
    n: Option<usize>,
    m1: Option<f64>,
    m2: Option<f64>,
    y10: Option<f64>,
    dy20: Option<f64>,
    df0: Option<f64>,
    theta0_p: Option<i64>,
    theta0_q: Option<i64>,
    t0: Option<f64>,
    id: Option<String>,
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Parse(format!("bad value for {key}: {v:?}")))
}

fn set<T>(slot: &mut Option<T>, key: &str, v: T) -> Result<()> {
    if slot.replace(v).is_some() {
        return Err(Error::Parse(format!("duplicate key {key}")));
    }
    Ok(())
}

impl Fields {
    fn put(&mut self, key: &str, v: &str, allow_id: bool) -> Result<()> {
        match key {
            "n" => set(&mut self.n, key, num(key, v)?),
            "m1" => set(&mut self.m1, key, num(key, v)?),
            "m2" => set(&mut self.m2, key, num(key, v)?),
            "y10" => set(&mut self.y10, key, num(key, v)?),
            "dy20" => set(&mut self.dy20, key, num(key, v)?),
            "df0" => set(&mut self.df0, key, num(key, v)?),
            "theta0_p" => set(&mut self.theta0_p, key, num(key, v)?),
            "theta0_q" => set(&mut self.theta0_q, key, num(key, v)?),
            "t0" => set(&mut self.t0, key, num(key, v)?),
            "id" if allow_id => set(&mut self.id, key, v.to_string()),
            _ => Err(Error::Parse(format!("unknown key {key:?}"))),
        }
    }

    fn finish(self) -> Result<(Option<String>, SeedConfig)> {
        let need = |name: &str| Error::Parse(format!("missing key {name}"));
        let flat = FlatSeed {
            n: self.n.ok_or_else(|| need("n"))?,
            m1: self.m1.ok_or_else(|| need("m1"))?,
            m2: self.m2.ok_or_else(|| need("m2"))?,
            y10: self.y10.ok_or_else(|| need("y10"))?,
            dy20: self.dy20.ok_or_else(|| need("dy20"))?,
            df0: self.df0.ok_or_else(|| need("df0"))?,
            theta0_p: self.theta0_p,
            theta0_q: self.theta0_q,
            t0: self.t0,
        };
        Ok((self.id, flat.into_seed()?))
    }
}

fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("").trim()
}

/// Parses a seed from a JSON object or `key = value` lines.
pub fn parse_seed(text: &str) -> Result<SeedConfig> {
    let body = text.trim_start();
    if body.starts_with('{') {
        let flat: FlatSeed = serde_json::from_str(body).map_err(|e| Error::Parse(e.to_string()))?;
        return flat.into_seed();
    }
    let mut fields = Fields::default();
    for line in text.lines() {
        let line = strip_comment(line);
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected key = value, got {line:?}")))?;
        fields.put(k.trim(), v.trim(), false)?;
    }
    fields.finish().map(|(_, q)| q)
}

/// `key = value` lines; the period keys are written only when set.
pub fn format_seed(q: &SeedConfig) -> String {
    let mut s = format!(
        "n = {}\nm1 = {}\nm2 = {}\ny10 = {}\ndy20 = {}\ndf0 = {}\n",
        q.n, q.m1, q.m2, q.y10, q.dy20, q.df0
    );
    if let Some(th) = q.theta0 {
        s.push_str(&format!("theta0_p = {}\ntheta0_q = {}\n", th.numer(), th.denom()));
    }
    if let Some(t0) = q.t0 {
        s.push_str(&format!("t0 = {t0}\n"));
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureRow {
    pub id: String,
    pub seed: SeedConfig,
    /// Line number in the fixture file, starting at 1.
    pub line: usize,
}

pub fn parse_fixture(text: &str) -> Result<Vec<FixtureRow>> {
    let mut rows: Vec<FixtureRow> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let mut fields = Fields::default();
        for tok in line.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key=value, got {tok:?}", i + 1)))?;
            fields.put(k, v, true).map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))?;
        }
        let (id, seed) = fields.finish().map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))?;
        let id = id.unwrap_or_else(|| format!("line{}", i + 1));
        if rows.iter().any(|r| r.id == id) {
            return Err(Error::Parse(format!("line {}: duplicate id {id}", i + 1)));
        }
        rows.push(FixtureRow { id, seed, line: i + 1 });
    }
    Ok(rows)
}

pub fn format_fixture_row(id: &str, q: &SeedConfig) -> String {
    let mut s = format!(
        "id={id} n={} m1={} m2={} y10={} dy20={} df0={}",
        q.n, q.m1, q.m2, q.y10, q.dy20, q.df0
    );
    if let Some(th) = q.theta0 {
        s.push_str(&format!(" theta0_p={} theta0_q={}", th.numer(), th.denom()));
    }
    if let Some(t0) = q.t0 {
        s.push_str(&format!(" t0={t0}"));
    }
    s
}

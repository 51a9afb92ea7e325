//! Run manifest written as a comment header into every output file.

use ringbody::model::SeedConfig;
use time::format_description::well_known::Rfc3339;
use time::OffsetDateTime;

pub struct Manifest {
    pub command: &'static str,
    pub seed_source: Option<String>,
    pub seed: Option<SeedConfig>,
    pub settings: Vec<(String, String)>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &'static str) -> Self {
        Self {
            command,
            seed_source: None,
            seed: None,
            settings: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn setting(mut self, key: &str, value: impl ToString) -> Self {
        self.settings.push((key.to_string(), value.to_string()));
        self
    }

    pub fn lines(&self) -> Vec<String> {
        let mut out = vec![
            format!("ringbody {}", env!("CARGO_PKG_VERSION")),
            format!("command: {}", self.command),
        ];
        if let Some(src) = &self.seed_source {
            out.push(format!("seed source: {src}"));
        }
        if let Some(q) = &self.seed {
            out.push(format!("seed: {}", seed_tokens(q)));
        }
        if !self.settings.is_empty() {
            let s: Vec<String> = self.settings.iter().map(|(k, v)| format!("{k}={v}")).collect();
            out.push(format!("settings: {}", s.join(" ")));
        }
        for o in &self.outputs {
            out.push(format!("output: {o}"));
        }
        out.push(format!("timestamp: {}", timestamp()));
        out
    }
}

/// `key=value` tokens in shortest round-trip form.
pub fn seed_tokens(q: &SeedConfig) -> String {
    let mut s = format!("n={} m1={} m2={} y10={} dy20={} df0={}", q.n, q.m1, q.m2, q.y10, q.dy20, q.df0);
    if let Some(th) = q.theta0 {
        s.push_str(&format!(" theta0={th}"));
    }
    if let Some(t0) = q.t0 {
        s.push_str(&format!(" t0={t0}"));
    }
    s
}

/// `SOURCE_DATE_EPOCH` when set, so that repeated runs can be byte-identical.
fn timestamp() -> String {
    let now = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.trim().parse::<i64>().ok())
        .and_then(|s| OffsetDateTime::from_unix_timestamp(s).ok())
        .unwrap_or_else(OffsetDateTime::now_utc);
    now.format(&Rfc3339).unwrap_or_else(|_| now.unix_timestamp().to_string())
}

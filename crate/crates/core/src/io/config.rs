//! Plain `key = value` run configuration.
//!
//! Lines hold one `key = value` pair; `#` starts a comment and lists are
//! comma separated. Only keys that were set are stored, so the canonical text
//! (sorted keys, shortest round-trip floats) is a stable run identity.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::experiments::{ExperimentKind, ExperimentSpec, KernelSpec};
use crate::solver::grid::ALIGN_TOL;
use crate::solver::init::{EpsScale, Profile};

/// Key excluded from the run identity.
pub const OUTPUT_KEY: &str = "output_dir";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Float,
    Floats,
    Int,
    Ints,
    Word,
}

#[derive(Debug, Clone, Copy)]
enum Range {
    Any,
    Positive,
    NonNegative,
    AtLeast(f64),
    Above(f64),
    Words(&'static [&'static str]),
}

struct KeyDef {
    name: &'static str,
    kind: Kind,
    range: Range,
}

const fn key(name: &'static str, kind: Kind, range: Range) -> KeyDef {
    KeyDef { name, kind, range }
}

const KINDS: &[&str] = &["dissipation", "landau", "echo", "threshold", "thermalize"];
const PROFILES: &[&str] = &["zero", "gaussian", "algebraic", "echo"];

const KEYS: &[KeyDef] = &[
    key("experiment", Kind::Word, Range::Words(KINDS)),
    key("nu", Kind::Floats, Range::Positive),
    key("eps", Kind::Floats, Range::NonNegative),
    key("k_list", Kind::Ints, Range::AtLeast(1.0)),
    key("k_max", Kind::Int, Range::AtLeast(1.0)),
    key("dt", Kind::Float, Range::Positive),
    key("eta_max", Kind::Float, Range::Positive),
    key("n_eta", Kind::Int, Range::AtLeast(8.0)),
    key("t_final", Kind::Float, Range::Positive),
    key("fit_window", Kind::Floats, Range::NonNegative),
    key("kernel", Kind::Word, Range::Words(&["coulomb", "screened", "table"])),
    key("kernel_table", Kind::Floats, Range::NonNegative),
    key("profile", Kind::Word, Range::Words(PROFILES)),
    key("profile_k", Kind::Int, Range::AtLeast(1.0)),
    key("profile_width", Kind::Float, Range::Positive),
    key("profile_p", Kind::Float, Range::NonNegative),
    key("profile_cutoff", Kind::Float, Range::Positive),
    key("echo_pump_k", Kind::Int, Range::AtLeast(2.0)),
    key("echo_seed", Kind::Float, Range::Any),
    key("echo_eta_star", Kind::Float, Range::Any),
    key("eps_scale", Kind::Word, Range::Words(&["amplitude", "sobolev"])),
    key("eps_sobolev_s", Kind::Float, Range::Any),
    key("eps_sobolev_m", Kind::Int, Range::NonNegative),
    key("norm_s", Kind::Float, Range::Any),
    key("norm_c", Kind::Float, Range::NonNegative),
    key("norm_m", Kind::Int, Range::NonNegative),
    key("norm_delta", Kind::Float, Range::Positive),
    key("norm_delta1", Kind::Float, Range::Positive),
    key("norm_sigma", Kind::Float, Range::Positive),
    key("norm_beta", Kind::Float, Range::Positive),
    key("norm_p", Kind::Float, Range::Positive),
    key("norm_theta", Kind::Float, Range::Positive),
    key("threshold_ratio", Kind::Float, Range::Above(1.0)),
    key("threshold_eps_max", Kind::Float, Range::Positive),
    key("threshold_rel_precision", Kind::Float, Range::Positive),
    key("threshold_eta_factor", Kind::Float, Range::Positive),
    key("threshold_window_factor", Kind::Float, Range::Positive),
    key("landau_p", Kind::Float, Range::NonNegative),
    key("landau_cutoff_factor", Kind::Float, Range::Positive),
    key("landau_horizon_factor", Kind::Float, Range::Positive),
    key("landau_substeps", Kind::Int, Range::AtLeast(1.0)),
    key("stride", Kind::Int, Range::AtLeast(1.0)),
    key("workers", Kind::Int, Range::NonNegative),
    key(OUTPUT_KEY, Kind::Word, Range::Any),
];

/// One parsed value.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Float(f64),
    Floats(Vec<f64>),
    Int(i64),
    Ints(Vec<i64>),
    Word(String),
}

impl Value {
    fn render(&self) -> String {
        fn join<T: ToString>(v: &[T]) -> String {
            v.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
        }
        match self {
            Value::Float(x) => float_text(*x),
            Value::Floats(v) => v.iter().map(|x| float_text(*x)).collect::<Vec<_>>().join(", "),
            Value::Int(i) => i.to_string(),
            Value::Ints(v) => join(v),
            Value::Word(s) => s.clone(),
        }
    }
}

/// Shortest text that parses back to the same bits.
pub fn float_text(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: Value,
    line: usize,
}

/// Validated configuration holding the keys that were set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    entries: BTreeMap<String, Entry>,
}

fn config_err(line: usize, key: &str, msg: impl Into<String>) -> Error {
    Error::Config {
        line,
        key: key.into(),
        msg: msg.into(),
    }
}

fn parse_value(def: &KeyDef, raw: &str, line: usize) -> Result<Value> {
    let err = |m: String| config_err(line, def.name, m);
    let items: Vec<&str> = raw.split(',').map(str::trim).collect();
    if items.iter().any(|s| s.is_empty()) {
        return Err(err(format!("empty list item in `{raw}`")));
    }
    let float = |s: &str| -> Result<f64> {
        let x: f64 = s.parse().map_err(|_| err(format!("`{s}` is not a number")))?;
        if !x.is_finite() {
            return Err(err(format!("`{s}` is not finite")));
        }
        check_range(def, x).map_err(&err)?;
        Ok(x)
    };
    let int = |s: &str| -> Result<i64> {
        let i: i64 = s.parse().map_err(|_| err(format!("`{s}` is not an integer")))?;
        check_range(def, i as f64).map_err(&err)?;
        Ok(i)
    };
    let single = |kind: &str| -> Result<()> {
        if items.len() != 1 {
            return Err(err(format!("expected a single {kind}, got a list")));
        }
        Ok(())
    };
    Ok(match def.kind {
        Kind::Float => {
            single("number")?;
            Value::Float(float(items[0])?)
        }
        Kind::Int => {
            single("integer")?;
            Value::Int(int(items[0])?)
        }
        Kind::Floats => Value::Floats(items.iter().map(|s| float(s)).collect::<Result<_>>()?),
        Kind::Ints => Value::Ints(items.iter().map(|s| int(s)).collect::<Result<_>>()?),
        Kind::Word => {
            single("word")?;
            let w = items[0];
            if let Range::Words(allowed) = def.range {
                if !allowed.contains(&w) {
                    return Err(err(format!("`{w}` is not one of {}", allowed.join(", "))));
                }
            }
            Value::Word(w.to_string())
        }
    })
}

fn check_range(def: &KeyDef, x: f64) -> std::result::Result<(), String> {
    let ok = match def.range {
        Range::Any | Range::Words(_) => true,
        Range::Positive => x > 0.0,
        Range::NonNegative => x >= 0.0,
        Range::AtLeast(a) => x >= a,
        Range::Above(a) => x > a,
    };
    if ok {
        Ok(())
    } else {
        let want = match def.range {
            Range::Positive => "positive".to_string(),
            Range::NonNegative => "nonnegative".to_string(),
            Range::AtLeast(a) => format!("at least {a}"),
            Range::Above(a) => format!("greater than {a}"),
            _ => String::new(),
        };
        Err(format!("value {x} out of range: must be {want}"))
    }
}

/// Parses and validates configuration text.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut entries = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (k, v) = body
            .split_once('=')
            .ok_or_else(|| config_err(line, body, "expected `key = value`"))?;
        let (k, v) = (k.trim(), v.trim());
        let def = KEYS
            .iter()
            .find(|d| d.name == k)
            .ok_or_else(|| config_err(line, k, "unknown key"))?;
        if v.is_empty() {
            return Err(config_err(line, k, "missing value"));
        }
        let value = parse_value(def, v, line)?;
        if let Some(prev) = entries.insert(k.to_string(), Entry { value, line }) {
            return Err(config_err(line, k, format!("duplicate key, first set on line {}", prev.line)));
        }
    }
    let cfg = RunConfig { entries };
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.get(key).map(|e| &e.value)
    }

    fn line(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |e| e.line)
    }

    fn float(&self, key: &str) -> Option<f64> {
        match self.get(key) {
            Some(Value::Float(x)) => Some(*x),
            _ => None,
        }
    }

    fn floats(&self, key: &str) -> Option<&[f64]> {
        match self.get(key) {
            Some(Value::Floats(v)) => Some(v),
            _ => None,
        }
    }

    fn int(&self, key: &str) -> Option<i64> {
        match self.get(key) {
            Some(Value::Int(i)) => Some(*i),
            _ => None,
        }
    }

    fn word(&self, key: &str) -> Option<&str> {
        match self.get(key) {
            Some(Value::Word(s)) => Some(s),
            _ => None,
        }
    }

    fn err(&self, key: &str, msg: impl Into<String>) -> Error {
        config_err(self.line(key), key, msg)
    }

    pub fn experiment(&self) -> Option<ExperimentKind> {
        self.word("experiment").and_then(|w| w.parse().ok())
    }

    pub fn output_dir(&self) -> Option<&str> {
        self.word(OUTPUT_KEY)
    }

    /// Cross-key rules: grid alignment, list shapes and key dependencies.
    fn validate(&self) -> Result<()> {
        if let Some(n) = self.int("n_eta") {
            if n % 2 != 0 {
                return Err(self.err("n_eta", format!("must be even, got {n}")));
            }
            let Some(eta_max) = self.float("eta_max") else {
                return Err(self.err("n_eta", "requires eta_max"));
            };
            if let Some(dt) = self.float("dt") {
                let d = 2.0 * eta_max / n as f64;
                if (dt - d).abs() > ALIGN_TOL * d {
                    return Err(self.err(
                        "dt",
                        format!("alignment violated: dt = {dt} but 2 eta_max / n_eta = {d}"),
                    ));
                }
            }
        } else if let Some(eta_max) = self.float("eta_max") {
            let dt = self.float("dt").unwrap_or(0.1);
            let n = 2.0 * eta_max / dt;
            if (n - n.round()).abs() > 1e-9 * n || (n.round() as i64) % 2 != 0 {
                return Err(self.err(
                    "eta_max",
                    format!("2 eta_max / dt = {n} must be an even integer"),
                ));
            }
        }
        if let Some(w) = self.floats("fit_window") {
            if w.len() != 2 || !(w[0] < w[1]) {
                return Err(self.err("fit_window", "expected `start, end` with start < end"));
            }
        }
        if self.get("kernel_table").is_some() && self.word("kernel") != Some("table") {
            return Err(self.err("kernel_table", "requires kernel = table"));
        }
        if self.word("kernel") == Some("table") && self.get("kernel_table").is_none() {
            return Err(self.err("kernel", "kernel = table requires kernel_table"));
        }
        let sobolev = self.word("eps_scale") == Some("sobolev");
        for k in ["eps_sobolev_s", "eps_sobolev_m"] {
            if self.get(k).is_some() && !sobolev {
                return Err(self.err(k, "requires eps_scale = sobolev"));
            }
        }
        Ok(())
    }

    /// Sorted `key = value` lines of every set key except the output path.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for (k, e) in &self.entries {
            if k != OUTPUT_KEY {
                let _ = writeln!(out, "{k} = {}", e.value.render());
            }
        }
        out
    }

    /// Lowercase hex SHA-256 of the UTF-8 canonical text.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }

    /// Resolves the experiment kind: the `experiment` key must agree with
    /// `requested` when both are present.
    pub fn resolve_kind(&self, requested: Option<ExperimentKind>) -> Result<ExperimentKind> {
        match (self.experiment(), requested) {
            (Some(a), Some(b)) if a != b => Err(self.err(
                "experiment",
                format!("config is for `{a}` but `{b}` was requested"),
            )),
            (Some(a), _) | (None, Some(a)) => Ok(a),
            (None, None) => Err(config_err(0, "experiment", "no experiment selected")),
        }
    }

    /// Resolved spec: defaults for `kind` overridden by the keys that were set.
    pub fn to_spec(&self, kind: ExperimentKind) -> Result<ExperimentSpec> {
        let mut s = ExperimentSpec::defaults(kind);
        if let Some(v) = self.floats("nu") {
            s.nu_list = v.to_vec();
        }
        if let Some(v) = self.floats("eps") {
            s.eps_list = v.to_vec();
        }
        if let Some(Value::Ints(v)) = self.get("k_list") {
            s.k_list = v.clone();
        }
        if let Some(k) = self.int("k_max") {
            s.k_max = k as usize;
        }
        if let Some(n) = self.int("n_eta") {
            let eta_max = self.float("eta_max").unwrap_or_default();
            s.dt = 2.0 * eta_max / n as f64;
        }
        if let Some(dt) = self.float("dt") {
            s.dt = dt;
        }
        if let Some(e) = self.float("eta_max") {
            s.eta_max = Some(e);
        }
        if let Some(t) = self.float("t_final") {
            s.t_final = Some(t);
        }
        if let Some(w) = self.floats("fit_window") {
            s.fit_window = Some((w[0], w[1]));
        }
        match self.word("kernel") {
            Some("coulomb") => s.kernel = KernelSpec::Coulomb,
            Some("screened") => s.kernel = KernelSpec::Screened,
            Some("table") => {
                s.kernel = KernelSpec::Table {
                    values: self.floats("kernel_table").unwrap_or_default().to_vec(),
                }
            }
            _ => {}
        }
        s.profile = self.profile(&s.profile)?;
        if self.word("eps_scale") == Some("sobolev") {
            s.eps_scale = EpsScale::Sobolev {
                s: self.float("eps_sobolev_s").unwrap_or(0.0),
                m: self.int("eps_sobolev_m").unwrap_or(0) as usize,
            };
        } else if self.word("eps_scale") == Some("amplitude") {
            s.eps_scale = EpsScale::Amplitude;
        }
        let n = &mut s.norm;
        for (k, slot) in [
            ("norm_s", &mut n.s),
            ("norm_c", &mut n.c),
            ("norm_delta", &mut n.delta),
            ("norm_delta1", &mut n.delta1),
            ("norm_sigma", &mut n.sigma),
            ("norm_beta", &mut n.beta),
            ("norm_p", &mut n.p),
            ("norm_theta", &mut n.theta),
        ] {
            if let Some(x) = self.float(k) {
                *slot = x;
            }
        }
        if let Some(m) = self.int("norm_m") {
            n.m = m as usize;
        }
        let t = &mut s.threshold;
        for (k, slot) in [
            ("threshold_ratio", &mut t.ratio),
            ("threshold_eps_max", &mut t.eps_max),
            ("threshold_rel_precision", &mut t.rel_precision),
            ("threshold_eta_factor", &mut t.eta_factor),
            ("threshold_window_factor", &mut t.window_factor),
        ] {
            if let Some(x) = self.float(k) {
                *slot = x;
            }
        }
        let l = &mut s.landau;
        for (k, slot) in [
            ("landau_p", &mut l.p),
            ("landau_cutoff_factor", &mut l.cutoff_factor),
            ("landau_horizon_factor", &mut l.horizon_factor),
        ] {
            if let Some(x) = self.float(k) {
                *slot = x;
            }
        }
        if let Some(n) = self.int("landau_substeps") {
            l.substeps = n as usize;
        }
        if let Some(n) = self.int("stride") {
            s.stride = n as usize;
        }
        if let Some(n) = self.int("workers") {
            s.workers = n as usize;
        }
        s.validate().map_err(|e| config_err(0, "spec", e.to_string()))?;
        Ok(s)
    }

    /// Profile keys applied on top of `base` (or on the defaults of the
    /// profile named by `profile`).
    fn profile(&self, base: &Profile) -> Result<Profile> {
        let named = self.word("profile");
        let mut p = match (named, base) {
            (None, b) => b.clone(),
            (Some("zero"), _) => Profile::Zero,
            (Some("gaussian"), b @ Profile::Gaussian { .. }) => b.clone(),
            (Some("gaussian"), _) => Profile::Gaussian { k: 1, width: 1.0 },
            (Some("algebraic"), _) => Profile::Algebraic {
                k: 1,
                p: 4.0,
                cutoff: 10.0,
            },
            (Some("echo"), b @ Profile::Echo { .. }) => b.clone(),
            (Some(_), _) => Profile::Echo {
                pump_k: 2,
                seed: 1.0,
                eta_star: 15.0,
                width: 1.0,
            },
        };
        let mut used = Vec::new();
        match &mut p {
            Profile::Gaussian { k, width } => {
                set_int(self, "profile_k", k, &mut used);
                set_f(self, "profile_width", width, &mut used);
            }
            Profile::Algebraic { k, p, cutoff } => {
                set_int(self, "profile_k", k, &mut used);
                set_f(self, "profile_p", p, &mut used);
                set_f(self, "profile_cutoff", cutoff, &mut used);
            }
            Profile::Echo {
                pump_k,
                seed,
                eta_star,
                width,
            } => {
                set_int(self, "echo_pump_k", pump_k, &mut used);
                set_f(self, "echo_seed", seed, &mut used);
                set_f(self, "echo_eta_star", eta_star, &mut used);
                set_f(self, "profile_width", width, &mut used);
            }
            Profile::Zero | Profile::Sampled { .. } => {}
        }
        for k in [
            "profile_k",
            "profile_width",
            "profile_p",
            "profile_cutoff",
            "echo_pump_k",
            "echo_seed",
            "echo_eta_star",
        ] {
            if self.get(k).is_some() && !used.contains(&k) {
                return Err(self.err(k, "does not apply to the selected profile"));
            }
        }
        Ok(p)
    }
}

fn set_f(c: &RunConfig, key: &'static str, slot: &mut f64, used: &mut Vec<&'static str>) {
    if let Some(x) = c.float(key) {
        *slot = x;
        used.push(key);
    }
}

fn set_int(c: &RunConfig, key: &'static str, slot: &mut i64, used: &mut Vec<&'static str>) {
    if let Some(x) = c.int(key) {
        *slot = x;
        used.push(key);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_round_trips() {
        let c = parse_config("").unwrap();
        assert_eq!(c.canonical(), "");
        assert_eq!(parse_config(&c.canonical()).unwrap(), c);
    }

    #[test]
    fn negative_nu_names_key() {
        let e = parse_config("# scan\nnu = -1\n").unwrap_err();
        match e {
            Error::Config { line, key, .. } => {
                assert_eq!(line, 2);
                assert_eq!(key, "nu");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn alignment_rule() {
        assert!(parse_config("dt = 0.01\nn_eta = 1000\neta_max = 5\n").is_ok());
        let e = parse_config("dt = 0.02\nn_eta = 1000\neta_max = 5\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 1, ref key, .. } if key == "dt"));
    }

    #[test]
    fn unknown_and_duplicate_keys() {
        assert!(matches!(
            parse_config("nuu = 1").unwrap_err(),
            Error::Config { ref key, .. } if key == "nuu"
        ));
        assert!(parse_config("nu = 1\nnu = 2").is_err());
    }

    #[test]
    fn canonical_is_sorted_and_idempotent() {
        let c = parse_config("stride = 3\nnu = 1e-3, 0.0001  # two\nkernel = screened\n").unwrap();
        let text = c.canonical();
        assert_eq!(text, "kernel = screened\nnu = 0.001, 0.0001\nstride = 3\n");
        assert_eq!(parse_config(&text).unwrap().canonical(), text);
    }

    #[test]
    fn output_dir_outside_identity() {
        let a = parse_config("nu = 0.001\n").unwrap();
        let b = parse_config("nu = 0.001\noutput_dir = /tmp/x\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = parse_config("nu = 0.002\n").unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn spec_mapping() {
        let c = parse_config("nu = 0.001\nk_max = 2\nprofile_width = 2\nn_eta = 400\neta_max = 20\n").unwrap();
        let s = c.to_spec(ExperimentKind::Echo).unwrap();
        assert_eq!(s.nu_list, vec![1e-3]);
        assert_eq!(s.dt, 0.1);
        assert!(matches!(s.profile, Profile::Echo { width, .. } if width == 2.0));
        let bad = parse_config("profile = gaussian\necho_seed = 2\n").unwrap();
        assert!(bad.to_spec(ExperimentKind::Echo).is_err());
    }
}

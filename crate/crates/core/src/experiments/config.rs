//! Flat `key = value` experiment configs.
//!
//! ```text
//! # comment
//! problem.hamiltonian.kind = quadratic
//! problem.potential.a = two_plus_sin
//! problem.potential.b = cos2pi_minus1
//! probes = [(0, 1), (0.5, 0.75)]
//! epsilon = [0.125, 0.0625, 0.03125, 0.015625]
//! ```
//!
//! See the README for the full grammar and the list of keys.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{CellProfile, CustomHamiltonian, HamiltonianKind, InitialData, Models, Potential, XProfile};

/// A parsed right-hand side.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Number(f64),
    Text(String),
    List(Vec<f64>),
    Pairs(Vec<(f64, f64)>),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Number(v) => write!(f, "{v:?}"),
            Value::Text(s) => write!(f, "\"{s}\""),
            Value::List(v) => {
                let parts: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
                write!(f, "[{}]", parts.join(", "))
            }
            Value::Pairs(v) => {
                let parts: Vec<String> = v.iter().map(|(a, b)| format!("({a:?}, {b:?})")).collect();
                write!(f, "[{}]", parts.join(", "))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Evaluator {
    Action,
    Fd,
    Both,
}

impl Evaluator {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "action" => Some(Evaluator::Action),
            "fd" => Some(Evaluator::Fd),
            "both" => Some(Evaluator::Both),
            _ => None,
        }
    }

    pub fn uses_action(self) -> bool {
        matches!(self, Evaluator::Action | Evaluator::Both)
    }

    pub fn uses_fd(self) -> bool {
        matches!(self, Evaluator::Fd | Evaluator::Both)
    }
}

impl fmt::Display for Evaluator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Evaluator::Action => "action",
            Evaluator::Fd => "fd",
            Evaluator::Both => "both",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum HamiltonianSpec {
    Quadratic,
    Power { gamma: f64 },
    Cosh,
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub hamiltonian: HamiltonianSpec,
    pub grad_bound: Option<f64>,
    pub potential: Potential,
    pub u0: InitialData,
    pub c0: f64,
    pub half_width: f64,
    pub horizon: f64,
    pub probes: Vec<(f64, f64)>,
    pub epsilons: Vec<f64>,
    pub dx_over_eps: f64,
    pub evaluator: Evaluator,
    pub output: PathBuf,
    /// Canonical `key = value` lines, sorted by key.
    canonical: String,
}

const KEYS: &[&str] = &[
    "problem.hamiltonian.kind",
    "problem.hamiltonian.gamma",
    "problem.hamiltonian.grad_bound",
    "problem.potential.a",
    "problem.potential.b",
    "problem.potential.b_scale",
    "problem.potential.b_table",
    "problem.potential.shift",
    "problem.u0.kind",
    "problem.u0.value",
    "problem.u0.slope",
    "problem.u0.cap",
    "problem.c0",
    "window.R",
    "window.T",
    "probes",
    "epsilon",
    "grid.dx_over_eps",
    "evaluator",
    "output",
];

fn config_err(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

fn parse_number(s: &str, line: usize) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| config_err(line, format!("expected a number, got `{}`", s.trim())))?;
    if !v.is_finite() {
        return Err(config_err(line, format!("non-finite number `{}`", s.trim())));
    }
    Ok(v)
}

fn parse_value(raw: &str, line: usize) -> Result<Value> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Err(config_err(line, "missing value"));
    }
    if let Some(inner) = raw.strip_prefix('[') {
        let inner = inner
            .strip_suffix(']')
            .ok_or_else(|| config_err(line, "unterminated list"))?
            .trim();
        if inner.is_empty() {
            return Ok(Value::List(Vec::new()));
        }
        if inner.starts_with('(') {
            let mut pairs = Vec::new();
            let mut rest = inner;
            while !rest.is_empty() {
                let body = rest
                    .strip_prefix('(')
                    .ok_or_else(|| config_err(line, format!("expected `(` at `{rest}`")))?;
                let close = body.find(')').ok_or_else(|| config_err(line, "unterminated pair"))?;
                let (a, b) = body[..close]
                    .split_once(',')
                    .ok_or_else(|| config_err(line, "pair needs two entries"))?;
                pairs.push((parse_number(a, line)?, parse_number(b, line)?));
                rest = body[close + 1..].trim_start();
                if let Some(r) = rest.strip_prefix(',') {
                    rest = r.trim_start();
                } else if !rest.is_empty() {
                    return Err(config_err(line, format!("expected `,` between pairs at `{rest}`")));
                }
            }
            return Ok(Value::Pairs(pairs));
        }
        let nums = inner
            .split(',')
            .map(|s| parse_number(s, line))
            .collect::<Result<Vec<_>>>()?;
        return Ok(Value::List(nums));
    }
    if let Some(inner) = raw.strip_prefix('"') {
        let s = inner
            .strip_suffix('"')
            .ok_or_else(|| config_err(line, "unterminated string"))?;
        return Ok(Value::Text(s.to_string()));
    }
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Value::Number(v)),
        Ok(_) => Err(config_err(line, format!("non-finite number `{raw}`"))),
        Err(_) => Ok(Value::Text(raw.to_string())),
    }
}

/// Drops everything from the first `#` outside a quoted string.
fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

/// Key/value pairs with the line each came from.
#[derive(Debug, Default)]
struct Entries(BTreeMap<String, (usize, Value)>);

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (k, raw_line) in text.lines().enumerate() {
            let line = k + 1;
            let content = strip_comment(raw_line).trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| config_err(line, format!("expected `key = value`, got `{content}`")))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(config_err(line, format!("unknown key `{key}`")));
            }
            let value = parse_value(value, line)?;
            if let Some((first, _)) = map.insert(key.to_string(), (line, value)) {
                return Err(config_err(line, format!("duplicate key `{key}` (first set on line {first})")));
            }
        }
        Ok(Self(map))
    }

    fn line(&self, key: &str) -> usize {
        self.0.get(key).map_or(0, |(l, _)| *l)
    }

    fn number(&self, key: &str) -> Result<Option<f64>> {
        match self.0.get(key) {
            None => Ok(None),
            Some((_, Value::Number(v))) => Ok(Some(*v)),
            Some((line, v)) => Err(config_err(*line, format!("`{key}` must be a number, got {v}"))),
        }
    }

    fn text(&self, key: &str) -> Result<Option<&str>> {
        match self.0.get(key) {
            None => Ok(None),
            Some((_, Value::Text(s))) => Ok(Some(s.as_str())),
            Some((line, v)) => Err(config_err(*line, format!("`{key}` must be a name, got {v}"))),
        }
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.0.get(key) {
            None => Ok(None),
            Some((_, Value::List(v))) => Ok(Some(v.clone())),
            Some((_, Value::Number(v))) => Ok(Some(vec![*v])),
            Some((line, v)) => Err(config_err(*line, format!("`{key}` must be a list of numbers, got {v}"))),
        }
    }

    fn pairs(&self, key: &str) -> Result<Option<Vec<(f64, f64)>>> {
        match self.0.get(key) {
            None => Ok(None),
            Some((_, Value::Pairs(v))) => Ok(Some(v.clone())),
            Some((_, Value::List(v))) if v.is_empty() => Ok(Some(Vec::new())),
            Some((line, v)) => Err(config_err(*line, format!("`{key}` must be a list of (x, t) pairs, got {v}"))),
        }
    }

    fn require<T>(&self, key: &str, v: Option<T>, what: &str) -> Result<T> {
        v.ok_or_else(|| config_err(self.line(key), format!("`{key}` is required {what}")))
    }

    fn forbid(&self, keys: &[&str], reason: &str) -> Result<()> {
        for key in keys {
            if self.0.contains_key(*key) {
                return Err(config_err(self.line(key), format!("`{key}` is not used {reason}")));
            }
        }
        Ok(())
    }

    fn canonical(&self) -> String {
        self.0.iter().map(|(k, (_, v))| format!("{k} = {v}\n")).collect()
    }
}

pub const DEFAULT_EPSILONS: [f64; 5] = [0.125, 0.0625, 0.03125, 0.015625, 0.0078125];

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let e = Entries::parse(text)?;

        let hamiltonian = match e.text("problem.hamiltonian.kind")?.unwrap_or("quadratic") {
            "quadratic" => {
                e.forbid(&["problem.hamiltonian.gamma"], "by the quadratic Hamiltonian")?;
                HamiltonianSpec::Quadratic
            }
            "power" => {
                let gamma = e.number("problem.hamiltonian.gamma")?;
                HamiltonianSpec::Power {
                    gamma: e.require("problem.hamiltonian.gamma", gamma, "for kind = power")?,
                }
            }
            "cosh" => {
                e.forbid(&["problem.hamiltonian.gamma"], "by the cosh Hamiltonian")?;
                HamiltonianSpec::Cosh
            }
            other => {
                return Err(config_err(
                    e.line("problem.hamiltonian.kind"),
                    format!("unknown Hamiltonian `{other}` (quadratic, power, cosh)"),
                ))
            }
        };
        let grad_bound = e.number("problem.hamiltonian.grad_bound")?;
        if let Some(m) = grad_bound {
            if !(m > 0.0) {
                return Err(config_err(e.line("problem.hamiltonian.grad_bound"), "grad_bound must be positive"));
            }
        }

        let a = match e.0.get("problem.potential.a") {
            None => XProfile::Constant(1.0),
            Some((_, Value::Number(c))) => XProfile::Constant(*c),
            Some((_, Value::Text(s))) if s == "two_plus_sin" => XProfile::TwoPlusSin,
            Some((line, v)) => {
                return Err(config_err(*line, format!("`problem.potential.a` must be a number or two_plus_sin, got {v}")))
            }
        };
        let b = match e.text("problem.potential.b")?.unwrap_or("zero") {
            "zero" => {
                e.forbid(&["problem.potential.b_scale", "problem.potential.b_table"], "with b = zero")?;
                CellProfile::Zero
            }
            "cos2pi_minus1" => {
                e.forbid(&["problem.potential.b_table"], "with b = cos2pi_minus1")?;
                CellProfile::Cos2PiMinus1 {
                    scale: e.number("problem.potential.b_scale")?.unwrap_or(1.0),
                }
            }
            "tent_prop43" => {
                e.forbid(&["problem.potential.b_scale", "problem.potential.b_table"], "with b = tent_prop43")?;
                CellProfile::TentProp43
            }
            "table" => {
                e.forbid(&["problem.potential.b_scale"], "with b = table")?;
                let t = e.list("problem.potential.b_table")?;
                CellProfile::Table(e.require("problem.potential.b_table", t, "for b = table")?)
            }
            other => {
                return Err(config_err(
                    e.line("problem.potential.b"),
                    format!("unknown cell profile `{other}` (zero, cos2pi_minus1, tent_prop43, table)"),
                ))
            }
        };
        if let CellProfile::Cos2PiMinus1 { scale } = b {
            if !(scale > 0.0) {
                return Err(config_err(e.line("problem.potential.b_scale"), "b_scale must be positive"));
            }
        }
        let potential = Potential::new(a, b)
            .map_err(|err| config_err(e.line("problem.potential.b"), err.to_string()))?
            .with_shift(e.number("problem.potential.shift")?.unwrap_or(0.0));

        let u0 = match e.text("problem.u0.kind")?.unwrap_or("clamp") {
            "constant" => {
                e.forbid(&["problem.u0.slope", "problem.u0.cap"], "with u0 = constant")?;
                InitialData::Constant(e.number("problem.u0.value")?.unwrap_or(0.0))
            }
            "clamp" => {
                e.forbid(&["problem.u0.value", "problem.u0.slope", "problem.u0.cap"], "with u0 = clamp")?;
                InitialData::Clamp
            }
            "cone" => {
                e.forbid(&["problem.u0.value"], "with u0 = cone")?;
                let slope = e.number("problem.u0.slope")?.unwrap_or(1.0);
                let cap = e.number("problem.u0.cap")?.unwrap_or(1.0);
                InitialData::cone(slope, cap).map_err(|err| config_err(e.line("problem.u0.cap"), err.to_string()))?
            }
            other => {
                return Err(config_err(
                    e.line("problem.u0.kind"),
                    format!("unknown initial datum `{other}` (constant, clamp, cone)"),
                ))
            }
        };
        let c0 = e.number("problem.c0")?.unwrap_or(0.0);

        let half_width = e.number("window.R")?.unwrap_or(1.0);
        let horizon = e.number("window.T")?.unwrap_or(1.0);
        if !(half_width > 0.0) || !(horizon > 0.0) {
            return Err(config_err(e.line("window.R").max(e.line("window.T")), "window.R and window.T must be positive"));
        }

        let probes = e.pairs("probes")?.unwrap_or_else(|| vec![(0.0, horizon)]);
        if probes.is_empty() {
            return Err(config_err(e.line("probes"), "at least one probe is required"));
        }
        for &(x, t) in &probes {
            if !(x.abs() <= half_width && (0.0..=horizon).contains(&t)) {
                return Err(config_err(
                    e.line("probes"),
                    format!("probe ({x}, {t}) lies outside [-{half_width}, {half_width}] x [0, {horizon}]"),
                ));
            }
        }

        let epsilons = e.list("epsilon")?.unwrap_or_else(|| DEFAULT_EPSILONS.to_vec());
        if epsilons.is_empty() {
            return Err(config_err(e.line("epsilon"), "the epsilon ladder is empty"));
        }
        if epsilons.iter().any(|&v| !(v > 0.0 && v < 1.0)) || epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return Err(config_err(
                e.line("epsilon"),
                "the epsilon ladder must be strictly decreasing inside (0, 1)",
            ));
        }

        let dx_over_eps = e.number("grid.dx_over_eps")?.unwrap_or(40.0);
        if !(dx_over_eps >= 20.0) {
            return Err(config_err(
                e.line("grid.dx_over_eps"),
                "grid.dx_over_eps must be at least 20 (the cell needs 20 nodes)",
            ));
        }
        let evaluator = match e.text("evaluator")? {
            None => Evaluator::Action,
            Some(s) => Evaluator::parse(s)
                .ok_or_else(|| config_err(e.line("evaluator"), format!("unknown evaluator `{s}` (action, fd, both)")))?,
        };
        let output = PathBuf::from(e.text("output")?.unwrap_or("out"));

        Ok(Self {
            hamiltonian,
            grad_bound,
            potential,
            u0,
            c0,
            half_width,
            horizon,
            probes,
            epsilons,
            dx_over_eps,
            evaluator,
            output,
            canonical: e.canonical(),
        })
    }

    fn kind(&self) -> HamiltonianKind {
        match self.hamiltonian {
            HamiltonianSpec::Quadratic => HamiltonianKind::Quadratic,
            HamiltonianSpec::Power { gamma } => HamiltonianKind::Power { gamma },
            HamiltonianSpec::Cosh => HamiltonianKind::Custom(CustomHamiltonian::cosh()),
        }
    }

    /// Validated models; fails on an inadmissible Hamiltonian.
    pub fn models(&self) -> Result<Models> {
        Models::new(self.kind(), self.potential.clone(), self.u0.clone(), self.c0, self.grad_bound)
    }

    /// Models that keep an inadmissible Hamiltonian, for the audit.
    pub fn models_unchecked(&self) -> Result<Models> {
        Models::new_unchecked(self.kind(), self.potential.clone(), self.u0.clone(), self.c0, self.grad_bound)
    }

    /// The config as sorted `key = value` lines; comments, ordering and
    /// number spelling do not matter.
    pub fn canonical(&self) -> &str {
        &self.canonical
    }

    /// First 16 hex digits of the SHA-256 of [`ExperimentConfig::canonical`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn dx(&self, eps: f64) -> f64 {
        eps / self.dx_over_eps
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const COROLLARY: &str = "
# x-dependent amplitude
problem.hamiltonian.kind = quadratic
problem.potential.a = two_plus_sin
problem.potential.b = cos2pi_minus1
problem.u0.kind = clamp
window.R = 1
window.T = 1
probes = [(0, 1), (-0.5, 0.25)]
epsilon = [0.125, 0.0625]
evaluator = both
output = \"runs/corollary\"
";

    #[test]
    fn parses_full_config() {
        let c = ExperimentConfig::parse(COROLLARY).unwrap();
        assert_eq!(c.hamiltonian, HamiltonianSpec::Quadratic);
        assert_eq!(c.potential.a, XProfile::TwoPlusSin);
        assert_eq!(c.probes, vec![(0.0, 1.0), (-0.5, 0.25)]);
        assert_eq!(c.epsilons, vec![0.125, 0.0625]);
        assert_eq!(c.evaluator, Evaluator::Both);
        assert_eq!(c.output, PathBuf::from("runs/corollary"));
        assert_eq!(c.dx(0.125), 0.125 / 40.0);
        c.models().unwrap();
    }

    #[test]
    fn hash_ignores_comments_and_order() {
        let a = ExperimentConfig::parse("window.R = 1\nepsilon = [0.5, 0.25]\n").unwrap();
        let b = ExperimentConfig::parse("# note\nepsilon = [0.50, 0.25] # ladder\nwindow.R = 1.0\n").unwrap();
        let c = ExperimentConfig::parse("window.R = 2\nepsilon = [0.5, 0.25]\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 16);
    }

    #[test]
    fn defaults() {
        let c = ExperimentConfig::parse("").unwrap();
        assert_eq!(c.epsilons, DEFAULT_EPSILONS.to_vec());
        assert_eq!(c.probes, vec![(0.0, 1.0)]);
        assert_eq!(c.evaluator, Evaluator::Action);
        assert!(c.potential.is_zero());
    }

    fn line_of(text: &str) -> usize {
        match ExperimentConfig::parse(text) {
            Err(Error::Config { line, .. }) => line,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_input_with_line_numbers() {
        assert_eq!(line_of("window.R = 1\nbogus = 3\n"), 2);
        assert_eq!(line_of("epsilon = [0.1, 0.2]\n"), 1);
        assert_eq!(line_of("\nepsilon = [0.5, 1.5]\n"), 2);
        assert_eq!(line_of("window.R = 1\nprobes = [(2, 0.5)]\n"), 2);
        assert_eq!(line_of("window.R = 1\nwindow.R = 2\n"), 2);
        assert_eq!(line_of("problem.hamiltonian.kind = power\n"), 0);
        assert_eq!(line_of("problem.potential.b = sawtooth\n"), 1);
        assert_eq!(line_of("evaluator = exact\n"), 1);
        assert_eq!(line_of("probes = [(0, 1), 3]\n"), 1);
        assert_eq!(line_of("grid.dx_over_eps = 10\n"), 1);
    }

    #[test]
    fn table_and_cone() {
        let c = ExperimentConfig::parse(
            "problem.potential.b = table\nproblem.potential.b_table = [0, -1, -1, -1]\nproblem.u0.kind = cone\nproblem.u0.slope = 0.5\nproblem.u0.cap = 2\n",
        )
        .unwrap();
        assert_eq!(c.potential.b, CellProfile::Table(vec![0.0, -1.0, -1.0, -1.0]));
        assert_eq!(c.u0, InitialData::Cone { slope: 0.5, cap: 2.0 });
    }

    #[test]
    fn power_hamiltonian_with_low_exponent_is_kept_unchecked() {
        let c = ExperimentConfig::parse("problem.hamiltonian.kind = power\nproblem.hamiltonian.gamma = 1.5\n").unwrap();
        assert!(c.models().is_err());
        c.models_unchecked().unwrap();
    }
}

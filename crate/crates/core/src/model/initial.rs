//! Bounded Lipschitz initial data `u0`.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum InitialData {
    Constant(f64),
    /// `-clamp(x, -1, 1)`.
    Clamp,
    /// `slope * min(|x|, cap)`.
    Cone { slope: f64, cap: f64 },
}

impl InitialData {
    pub fn cone(slope: f64, cap: f64) -> Result<Self> {
        if !(cap > 0.0) || !slope.is_finite() || !cap.is_finite() {
            return Err(Error::InvalidParameter(format!("cone needs finite slope and cap > 0, got ({slope}, {cap})")));
        }
        Ok(InitialData::Cone { slope, cap })
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            InitialData::Constant(c) => *c,
            InitialData::Clamp => -x.clamp(-1.0, 1.0),
            InitialData::Cone { slope, cap } => slope * x.abs().min(*cap),
        }
    }

    /// `Lip(u0) = ||u0'||_inf`.
    pub fn lip(&self) -> f64 {
        match self {
            InitialData::Constant(_) => 0.0,
            InitialData::Clamp => 1.0,
            InitialData::Cone { slope, .. } => slope.abs(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        match self {
            InitialData::Constant(c) => c.abs(),
            InitialData::Clamp => 1.0,
            InitialData::Cone { slope, cap } => (slope * cap).abs(),
        }
    }

    /// Points where `u0` is not differentiable.
    pub fn kinks(&self) -> Vec<f64> {
        match self {
            InitialData::Constant(_) => Vec::new(),
            InitialData::Clamp => vec![-1.0, 1.0],
            InitialData::Cone { cap, .. } => vec![-cap, 0.0, *cap],
        }
    }

    pub fn label(&self) -> String {
        match self {
            InitialData::Constant(c) => format!("constant({c})"),
            InitialData::Clamp => "clamp".into(),
            InitialData::Cone { slope, cap } => format!("cone(slope={slope}, cap={cap})"),
        }
    }
}

//! Trajectory and effective-Hamiltonian tables.

use std::fmt::Write as _;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::rate::num;
use crate::error::Result;
use crate::oracle::{effective_hamiltonian, flat_piece};
use crate::trajectories::{integrate_el, separatrix_paths, Query};
use crate::values::{u_eps, Winner};

/// Samples kept per path.
const MAX_SAMPLES: usize = 1000;

fn thin<T: Copy>(v: &[T]) -> Vec<T> {
    let stride = v.len().div_ceil(MAX_SAMPLES).max(1);
    let mut out: Vec<T> = v.iter().copied().step_by(stride).collect();
    if let Some(&last) = v.last() {
        if (v.len() - 1) % stride != 0 {
            out.push(last);
        }
    }
    out
}

/// The winning constant-energy path (when one wins) and both separatrices
/// for every probe and `eps`:
/// `epsilon,x0,t0,path,branch,r,s,eta,x,config_hash`.
pub fn dump_paths(cfg: &ExperimentConfig) -> Result<String> {
    let models = cfg.models()?;
    let hash = cfg.hash();
    let jobs: Vec<(f64, (f64, f64))> = cfg
        .epsilons
        .iter()
        .flat_map(|&e| cfg.probes.iter().map(move |&p| (e, p)))
        .collect();
    let blocks: Vec<String> = jobs
        .par_iter()
        .map(|&(eps, (x0, t0))| -> Result<String> {
            let q = Query::new(x0, t0, eps, cfg.half_width, cfg.horizon)?;
            let mut out = String::new();
            let mut line = |path: &str, branch: usize, r: f64, s: f64, eta: f64| {
                let _ = writeln!(
                    out,
                    "{},{},{},{path},{branch},{},{},{},{},{hash}",
                    num(eps),
                    num(x0),
                    num(t0),
                    num(r),
                    num(s),
                    num(eta),
                    num(eps * eta)
                );
            };
            if t0 > 0.0 {
                if let Winner::Energy { branch, r } = u_eps(&models, &q)?.winner {
                    let p = integrate_el(&models, &q, r, branch)?;
                    for s in thin(&p.samples) {
                        line("energy", branch.index(), r, s.s, s.eta);
                    }
                }
            }
            let (plus, minus) = separatrix_paths(&models, &q)?;
            for sep in [plus, minus] {
                let name = if sep.branch.index() == 1 { "gamma+" } else { "gamma-" };
                for (s, eta) in thin(&sep.samples) {
                    line(name, sep.branch.index(), 0.0, s, eta);
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut out = String::from("epsilon,x0,t0,path,branch,r,s,eta,x,config_hash\n");
    for b in blocks {
        out.push_str(&b);
    }
    Ok(out)
}

/// `H̄(x, p)` on 21 points of `[-R, R]` and 161 momenta in `|p| <= M + 1`:
/// `x,p,hbar,flat_lo,flat_hi,config_hash`.
pub fn effective_h_table(cfg: &ExperimentConfig) -> Result<String> {
    let models = cfg.models()?;
    let hash = cfg.hash();
    let p_max = models.hamiltonian.grad_bound() + 1.0;
    let xs: Vec<f64> = (0..=20).map(|k| cfg.half_width * (k as f64 / 10.0 - 1.0)).collect();
    let ps: Vec<f64> = (0..=160).map(|k| p_max * (k as f64 / 80.0 - 1.0)).collect();
    // Every column is the same when V does not depend on x.
    let distinct = if models.potential.is_x_independent() { &xs[..1] } else { &xs[..] };
    let columns: Vec<((f64, f64), Vec<f64>)> = distinct
        .par_iter()
        .map(|&x| -> Result<_> {
            let hs = ps
                .par_iter()
                .map(|&p| effective_hamiltonian(&models, x, p))
                .collect::<Result<Vec<_>>>()?;
            Ok((flat_piece(&models, x)?, hs))
        })
        .collect::<Result<_>>()?;
    let mut out = String::from("x,p,hbar,flat_lo,flat_hi,config_hash\n");
    for (i, &x) in xs.iter().enumerate() {
        let ((lo, hi), hs) = &columns[i.min(columns.len() - 1)];
        for (&p, h) in ps.iter().zip(hs) {
            let _ = writeln!(out, "{},{},{},{},{},{hash}", num(x), num(p), num(*h), num(*lo), num(*hi));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thinning_keeps_endpoints() {
        let v: Vec<usize> = (0..2501).collect();
        let t = thin(&v);
        assert!(t.len() <= MAX_SAMPLES + 1);
        assert_eq!(t[0], 0);
        assert_eq!(*t.last().unwrap(), 2500);
    }

    #[test]
    fn effective_table_is_deterministic() {
        let cfg = ExperimentConfig::parse("problem.potential.b = cos2pi_minus1\nepsilon = [0.25]\n").unwrap();
        let a = effective_h_table(&cfg).unwrap();
        assert_eq!(a, effective_h_table(&cfg).unwrap());
        assert_eq!(a.lines().count(), 1 + 21 * 161);
    }
}

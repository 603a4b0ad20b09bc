use proptest::prelude::*;

use hjhomog::experiments::{fit_slope, ExperimentConfig};
use hjhomog::model::{CellProfile, HamiltonianKind, InitialData, Models, Potential, XProfile};
use hjhomog::oracle::effective_hamiltonian;
use hjhomog::trajectories::Query;
use hjhomog::values::{certified_constants, u_eps, u_effective};

fn corollary(c0: f64) -> Models {
    let v = Potential::separable(XProfile::TwoPlusSin, CellProfile::Cos2PiMinus1 { scale: 1.0 });
    Models::new(HamiltonianKind::Quadratic, v, InitialData::Clamp, c0, None).unwrap()
}

proptest! {
    #[test]
    fn slope_fit_recovers_power_laws(slope in 0.1f64..3.0, c in 0.01f64..100.0, n in 4usize..9) {
        let rows: Vec<(f64, f64)> = (0..n).map(|k| {
            let e = 0.5f64.powi(k as i32 + 2);
            (e, c * e.powf(slope))
        }).collect();
        let fit = fit_slope(&rows).unwrap();
        prop_assert!((fit.slope - slope).abs() < 1e-9);
        prop_assert!((fit.intercept - c.ln()).abs() < 1e-8);
        prop_assert!(fit.residual < 1e-9);
    }

    #[test]
    fn config_hash_ignores_order_and_comments(r in 0.5f64..3.0, t in 0.5f64..3.0, shuffle in any::<bool>()) {
        let lines = [format!("window.R = {r}"), format!("window.T = {t}"), "problem.u0.kind = clamp".to_string()];
        let a = ExperimentConfig::parse(&lines.join("\n")).unwrap();
        let mut reordered = lines.to_vec();
        if shuffle {
            reordered.reverse();
        }
        reordered.insert(1, "# comment".into());
        let b = ExperimentConfig::parse(&reordered.join("\n")).unwrap();
        prop_assert_eq!(a.hash(), b.hash());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// `max(0, H(p) - ||V||) <= H̄(p) <= H(p)` since `-||V|| <= V <= 0`.
    #[test]
    fn effective_hamiltonian_is_sandwiched(p in -4.0f64..4.0, x in -2.0f64..2.0) {
        let m = corollary(0.0);
        let h = m.hamiltonian.h(p);
        let hb = effective_hamiltonian(&m, x, p).unwrap();
        let sup_v = 2.0 + x.sin();
        prop_assert!(hb <= h + 1e-10);
        prop_assert!(hb >= (h - 2.0 * sup_v).max(0.0) - 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// `|u_t| <= C̄` gives `|u^eps(x0, t0) - u0(x0)| <= C̄ t0`, and the rate
    /// bound holds at arbitrary probes.
    #[test]
    fn values_respect_a_priori_bounds(x in -1.0f64..1.0, t in 0.05f64..1.0, k in 3i32..5) {
        let m = corollary(0.0);
        let eps = 2f64.powi(-k);
        let q = Query::new(x, t, eps, 1.0, 1.0).unwrap();
        let v = u_eps(&m, &q).unwrap().value;
        let u = u_effective(&m, &q).unwrap().value;
        let c_bar = m.c_bar();
        prop_assert!((v - m.u0.value(x)).abs() <= c_bar * t + 1e-9);
        prop_assert!((u - m.u0.value(x)).abs() <= c_bar * t + 1e-9);
        prop_assert!(u <= m.u0.value(x) + 1e-9, "u0 is a supersolution of the effective equation");
        let c = certified_constants(&m, &q);
        prop_assert!((v - u).abs() <= c.c_total * eps);
    }

    /// `C0` only shifts the value by `-C0 t0`.
    #[test]
    fn additive_constant_shifts_by_time(x in -1.0f64..1.0, t in 0.05f64..1.0, c0 in -3.0f64..3.0) {
        let q = Query::new(x, t, 0.125, 1.0, 1.0).unwrap();
        let base = u_eps(&corollary(0.0), &q).unwrap();
        let shifted = u_eps(&corollary(c0), &q).unwrap();
        prop_assert!((shifted.normalized - base.normalized).abs() < 1e-12);
        prop_assert!((shifted.value - (base.value - c0 * t)).abs() < 1e-12);
    }
}

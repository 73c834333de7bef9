use std::sync::Arc;

use perclab::exact::to_f64;
use perclab::graphs::{ball, FamilyKind, GraphFamily};
use perclab::percolation::{sample_config_trial, tilted_mass, Config};

const R: u32 = 8;

fn median_profile(win: &Arc<perclab::graphs::Window>, p: f64, trials: u64) -> Vec<f64> {
    let radii: Vec<u32> = (1..=R).collect();
    let mut per_radius: Vec<Vec<f64>> = vec![Vec::new(); radii.len()];
    for t in 0..trials {
        let cfg = sample_config_trial(win.clone(), p, 35, t).unwrap();
        for (k, m) in tilted_mass(&cfg, 0, &radii).unwrap().iter().enumerate() {
            per_radius[k].push(to_f64(m));
        }
    }
    per_radius
        .into_iter()
        .map(|mut v| {
            v.sort_by(f64::total_cmp);
            v[v.len() / 2]
        })
        .collect()
}

#[test]
fn mass_profiles_straddling_ph() {
    let g = GraphFamily::new(FamilyKind::OrientedTree { n1: 1, n2: 2 }).unwrap();
    let win = Arc::new(ball(&g, &g.origin(), R).unwrap());
    let low = median_profile(&win, 0.35, 201);
    let high = median_profile(&win, 0.5, 201);
    assert!(
        low.iter().zip(&high).all(|(l, h)| h > l),
        "{low:?} {high:?}"
    );
    // Calibrated on 201 trials: the medians at R = 8 differ by a factor of about 7.
    assert!(
        high[R as usize - 1] >= 3.0 * low[R as usize - 1],
        "{low:?} {high:?}"
    );
}

#[test]
fn full_tree_mass_is_unbounded() {
    let g = GraphFamily::new(FamilyKind::OrientedTree { n1: 1, n2: 2 }).unwrap();
    let win = Arc::new(ball(&g, &g.origin(), R).unwrap());
    let radii: Vec<u32> = (1..=R).collect();
    let full = tilted_mass(&Config::constant(win, true), 0, &radii).unwrap();
    assert!(
        full.windows(2)
            .all(|w| to_f64(&w[1]) >= 2.0 * to_f64(&w[0])),
        "{full:?}"
    );
}

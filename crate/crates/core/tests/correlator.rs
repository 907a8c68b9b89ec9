use superdiff::analysis::{default_window, local_exponents, window_mean, ExponentSeries};
use superdiff::correlator::{
    reconstruct_directional, run_autocorrelation, run_spatial_profile, CorrelationSeries, Estimator, Protocol,
};
use superdiff::engine::{prepare_probe_random_state, run_program, RandomizationConfig};
use superdiff::lattice::{build_folded_chain, RungStyle, SiteId};
use superdiff::model::{compile_program, Axis, FloquetSchedule, InteractionVector, TrotterProgram};

fn folded(chain_len: usize, d: usize, lambda: InteractionVector, steps: usize) -> TrotterProgram {
    let spec = build_folded_chain(chain_len, &[(SiteId(d), SiteId(chain_len - 1 - d))], RungStyle::MidSite, SiteId(0))
        .unwrap();
    compile_program(&spec, &FloquetSchedule::new(1.0, steps).unwrap(), 1.0, 1.0, lambda).unwrap()
}

fn protocol(axis: Axis, realizations: usize, seed: u64, estimator: Estimator) -> Protocol {
    Protocol {
        axis,
        cycles: 9,
        realizations,
        seed,
        estimator,
    }
}

#[test]
fn stderr_shrinks_as_inverse_square_root() {
    let prog = folded(7, 2, InteractionVector::ISOTROPIC, 8);
    let ms = [5usize, 20, 80];
    let late: Vec<f64> = ms
        .iter()
        .map(|&m| {
            let s = run_autocorrelation(&prog, &protocol(Axis::Z, m, 3, Estimator::SingleSided)).unwrap();
            s.stderr[1..].iter().sum::<f64>() / (s.len() - 1) as f64
        })
        .collect();
    let slope = (late[2].ln() - late[0].ln()) / ((ms[2] as f64).ln() - (ms[0] as f64).ln());
    assert!((slope + 0.5).abs() <= 0.125, "slope {slope}");
}

#[test]
fn profile_at_probe_equals_autocorrelation() {
    let prog = folded(7, 2, InteractionVector::new(1.0, 0.0, 1.0), 6);
    for estimator in [Estimator::SingleSided, Estimator::Antisymmetric] {
        let p = protocol(Axis::Z, 6, 9, estimator);
        let auto = run_autocorrelation(&prog, &p).unwrap();
        let site = run_spatial_profile(&prog, &p).unwrap().site_series(0);
        assert_eq!(auto.mean, site.mean);
        assert_eq!(auto.stderr, site.stderr);
    }
}

#[test]
fn profile_sum_is_conserved_with_u1_rungs() {
    for lambda in [InteractionVector::new(0.0, 0.0, 1.0), InteractionVector::new(1.0, 1.0, 0.0), InteractionVector::ISOTROPIC] {
        let prog = folded(7, 2, lambda, 10);
        let p = run_spatial_profile(&prog, &protocol(Axis::Z, 4, 2, Estimator::Antisymmetric)).unwrap();
        let sums: Vec<f64> = p.mean.iter().map(|r| r.iter().sum()).collect();
        for s in &sums {
            assert!((s - sums[0]).abs() <= 1e-10, "{lambda:?}");
        }
    }
}

fn z_sums(lambda: InteractionVector, n_chain: usize, seed: u64) -> Vec<f64> {
    let prog = folded(n_chain, 2, lambda, 20);
    let rc = RandomizationConfig {
        cycles: 9,
        seed,
        realization_index: 0,
    };
    let mut state = prepare_probe_random_state(prog.lattice(), Axis::Z, &rc).unwrap();
    let mut sums = vec![state.expect_all(Axis::Z).iter().sum::<f64>()];
    run_program(&mut state, &prog, |_, s| sums.push(s.expect_all(Axis::Z).iter().sum())).unwrap();
    sums
}

#[test]
fn total_sz_per_realization() {
    for lambda in [InteractionVector::new(0.0, 0.0, 1.0), InteractionVector::new(1.0, 1.0, 0.0), InteractionVector::ISOTROPIC] {
        let sums = z_sums(lambda, 9, 4);
        let spread = sums.iter().map(|s| (s - sums[0]).abs()).fold(0.0, f64::max);
        assert!(spread <= 1e-10, "{lambda:?}: {spread:e}");
    }
    let sums = z_sums(InteractionVector::new(1.0, 0.0, 0.0), 9, 4);
    let spread = sums.iter().map(|s| (s - sums[0]).abs()).fold(0.0, f64::max);
    assert!(spread > 1e-6, "{spread:e}");
}

fn window_stats(s: &CorrelationSeries) -> (f64, f64) {
    let es: ExponentSeries = local_exponents(s).unwrap().with_running_from(6);
    let w = default_window(es.len());
    let sigma = es.sigma_running[w.clone()].iter().sum::<f64>() / w.len() as f64;
    (window_mean(&es, w).unwrap(), sigma)
}

fn axis_series(lambda: InteractionVector) -> [CorrelationSeries; 3] {
    let prog = folded(13, 3, lambda, 20);
    Axis::ALL.map(|a| run_autocorrelation(&prog, &protocol(a, 30, 1, Estimator::SingleSided)).unwrap())
}

/// Exponent of the autocorrelator along unit directions, from the three
/// axis correlators.
#[test]
fn directional_structure() {
    let diag = [1.0 / 3f64.sqrt(); 3];
    let dirs = [[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], diag, [0.6, 0.0, 0.8]];

    let [x, y, z] = axis_series(InteractionVector::ISOTROPIC);
    let iso: Vec<(f64, f64)> = dirs
        .iter()
        .map(|n| window_stats(&reconstruct_directional(&x, &y, &z, *n).unwrap()))
        .collect();
    for a in &iso {
        for b in &iso {
            assert!((a.0 - b.0).abs() <= (a.1 * a.1 + b.1 * b.1).sqrt(), "{iso:?}");
        }
    }

    let [x, y, z] = axis_series(InteractionVector::new(0.0, 0.0, 1.0));
    let (ex, _) = window_stats(&reconstruct_directional(&x, &y, &z, dirs[0]).unwrap());
    let (ez, _) = window_stats(&reconstruct_directional(&x, &y, &z, dirs[1]).unwrap());
    let (ed, _) = window_stats(&reconstruct_directional(&x, &y, &z, diag).unwrap());
    assert!(ex < -2.0 / 3.0, "x {ex}");
    assert!(ez > -2.0 / 3.0, "z {ez}");
    assert!(ex < ed && ed < ez, "{ex} {ed} {ez}");
}

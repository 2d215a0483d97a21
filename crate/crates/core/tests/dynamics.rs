use num_integer::Integer;

use qp_core::dynamics::{
    entropy_estimate, odometer_entropy_run, odometer_orbit, separated_count, CircleMapSpec, OdometerSpec,
};

#[test]
fn separated_counts_ignore_orientation() {
    for k in [2i64, 3, 5] {
        for n in 1..=4 {
            let a = separated_count(&CircleMapSpec::new(k), n).unwrap();
            let b = separated_count(&CircleMapSpec::new(-k), n).unwrap();
            assert_eq!(a, b, "k = {k}, n = {n}");
        }
    }
}

#[test]
fn estimates_stable_under_grid_doubling() {
    for k in [2i64, 3] {
        let coarse = entropy_estimate(&CircleMapSpec::new(k)).unwrap();
        let fine = entropy_estimate(&CircleMapSpec {
            grid_size: 2 * CircleMapSpec::DEFAULT_GRID,
            ..CircleMapSpec::new(k)
        })
        .unwrap();
        assert!((coarse - fine).abs() <= 0.02, "k = {k}: {coarse} vs {fine}");
    }
}

#[test]
fn rotation_has_no_entropy() {
    for k in [1i64, -1] {
        assert!(entropy_estimate(&CircleMapSpec::new(k)).unwrap().abs() <= 0.05);
    }
}

#[test]
fn odometer_orbits_divide_modulus() {
    for p in [2u32, 3, 5] {
        for level in 1..=4 {
            let modulus = u64::from(p).pow(level);
            for k in -30i64..=30 {
                let spec = OdometerSpec::new(p, level, k).unwrap();
                for start in 0..modulus.min(8) as i64 {
                    let size = odometer_orbit(&spec, start);
                    assert_eq!(modulus % size, 0);
                    assert_eq!(size, modulus / k.unsigned_abs().gcd(&modulus), "p = {p}, L = {level}, k = {k}");
                }
            }
        }
    }
}

#[test]
fn odometer_counts_flat() {
    let run = odometer_entropy_run(3, 4, 8).unwrap();
    let first = run.counts[0].1;
    assert!(run.counts.iter().all(|&(_, c)| c == first));
    assert!(run.estimate.abs() <= 1e-12);
}

use asep_core::ansatz::{count_gf_poly, joint_gf_exact, partition, profile_exact, schutz_factors};
use asep_core::oracle;
use asep_core::params::AsepParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid() -> Vec<AsepParams> {
    [
        (1.0, 1.0, 0.0, 0.0, 0.0),
        (0.4, 1.0, 0.0, 0.0, 0.0),
        (1.0, 0.3, 0.0, 0.0, 0.0),
        (0.7, 0.9, 0.2, 0.1, 0.3),
        (0.3, 0.8, 0.1, 0.3, 0.5),
        (1.4, 0.35, 0.4, 0.05, 0.2),
    ]
    .iter()
    .map(|&(a, b, g, d, q)| AsepParams::new(a, b, g, d, q).unwrap())
    .collect()
}

#[test]
fn generating_functions_match() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for asep in grid() {
        for n in 1..=8 {
            let table = oracle::solve(&asep, n).unwrap();
            for _ in 0..5 {
                let ts: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..3.0)).collect();
                let a = joint_gf_exact(&asep, &ts).unwrap();
                let b = table.joint_gf(&ts).unwrap();
                assert!(
                    (a - b).abs() <= 1e-10 * b.abs(),
                    "{asep:?} n={n}: {a} vs {b}"
                );
            }
            let p = profile_exact(&asep, n).unwrap();
            for (x, y) in p.iter().zip(table.occupancy_profile()) {
                assert!((x - y).abs() < 1e-10);
            }
            let c = count_gf_poly(&asep, n).unwrap().distribution();
            for (x, y) in c.iter().zip(table.count_distribution()) {
                assert!((x - y).abs() < 1e-10);
            }
        }
        let _ = partition(&asep, 3).unwrap();
    }
}

#[test]
fn schutz_against_profile() {
    for (al, be) in [(0.6, 0.8), (1.3, 0.6), (1.0, 1.3)] {
        let asep = AsepParams::tasep(al, be).unwrap();
        for n in 2..=6 {
            let p = profile_exact(&asep, n).unwrap();
            for j in 1..n {
                let f = schutz_factors(al, be, n, j).unwrap();
                let want = p[j - 1] - p[j];
                assert!(
                    (f.difference - want).abs() < 1e-10,
                    "{al} {be} {n} {j}: {} vs {want}",
                    f.difference
                );
            }
        }
    }
}

use fbmc_core::channel::{add_noise, apply_channel, draw_channel, freq_response, spill_over, PowerDelayProfile};
use fbmc_core::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DRAWS: usize = 100_000;

#[test]
fn single_tap_is_unit_power_rayleigh() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let pdp = PowerDelayProfile::flat();
    let mut power = 0.0;
    let mut below_median = 0usize;
    for _ in 0..DRAWS {
        let p = draw_channel(&pdp, 8, &mut rng).unwrap().taps[0].norm_sqr();
        power += p;
        // |h|² is exponential with mean 1: P(|h|² < ln 2) = 1/2.
        if p < std::f64::consts::LN_2 {
            below_median += 1;
        }
    }
    assert!((power / DRAWS as f64 - 1.0).abs() < 0.02);
    assert!((below_median as f64 / DRAWS as f64 - 0.5).abs() < 0.01);
}

#[test]
fn two_tap_powers() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let pdp = PowerDelayProfile::new(vec![0.5, 0.5]).unwrap();
    let mut acc = [0.0; 2];
    for _ in 0..DRAWS {
        let ch = draw_channel(&pdp, 8, &mut rng).unwrap();
        acc[0] += ch.taps[0].norm_sqr();
        acc[1] += ch.taps[1].norm_sqr();
    }
    for a in acc {
        assert!((a / DRAWS as f64 - 0.5).abs() < 0.01);
    }
}

#[test]
fn draws_are_reproducible() {
    let pdp = PowerDelayProfile::exponential(8, 20.0).unwrap();
    let a = draw_channel(&pdp, 64, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let b = draw_channel(&pdp, 64, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    assert_eq!(a, b);
    let mut x = vec![Complex64::default(); 16];
    let mut y = x.clone();
    add_noise(&mut x, 0.3, &mut ChaCha8Rng::seed_from_u64(4));
    add_noise(&mut y, 0.3, &mut ChaCha8Rng::seed_from_u64(4));
    assert_eq!(x, y);
}

#[test]
fn received_energy_is_preserved_on_average() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let pdp = PowerDelayProfile::exponential(8, 20.0).unwrap();
    let o: Vec<Complex64> = (0..64).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let sent: f64 = o.iter().map(|v| v.norm_sqr()).sum();
    let trials = 20_000;
    let mut got = 0.0;
    for _ in 0..trials {
        let ch = draw_channel(&pdp, 64, &mut rng).unwrap();
        let mut full = apply_channel(&o, &ch.taps, &[]).unwrap();
        full.extend(spill_over(&o, &ch.taps));
        got += full.iter().map(|v| v.norm_sqr()).sum::<f64>();
    }
    assert!((got / trials as f64 / sent - 1.0).abs() < 0.02);
}

#[test]
fn identity_and_delay() {
    let o = [Complex64::new(1.0, 2.0), Complex64::new(-3.0, 0.5), Complex64::new(0.0, 1.0)];
    assert_eq!(apply_channel(&o, &[Complex64::new(1.0, 0.0)], &[]).unwrap(), o.to_vec());
    let delayed = apply_channel(&o, &[Complex64::default(), Complex64::new(1.0, 0.0)], &[]).unwrap();
    assert_eq!(delayed, vec![Complex64::default(), o[0], o[1]]);
}

#[test]
fn two_point_response() {
    let c = freq_response(&[Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)], 2);
    assert!(c[0].norm() < 1e-15);
    assert!((c[1] - Complex64::new(2.0, 0.0)).norm() < 1e-15);
}

#[test]
fn noise_variance() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut x = vec![Complex64::default(); 1_000_000];
    add_noise(&mut x, 1.0, &mut rng);
    let n = x.len() as f64;
    let mean: Complex64 = x.iter().sum::<Complex64>() / n;
    let var = x.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / (n - 1.0);
    assert!((var - 1.0).abs() < 0.01);
    let re = x.iter().map(|v| v.re * v.re).sum::<f64>() / n;
    assert!((re - 0.5).abs() < 0.01);

    let mut y = vec![Complex64::new(0.25, -1.0); 8];
    add_noise(&mut y, 0.0, &mut rng);
    assert!(y.iter().all(|v| *v == Complex64::new(0.25, -1.0)));
}

#[test]
fn pdp_file_round_trip() {
    let text = "l,rho2\n0,0.6\n1,0.3\n# trailing tap\n3,0.1\n";
    let p = PowerDelayProfile::parse(text, false).unwrap();
    assert_eq!(p.powers(), &[0.6, 0.3, 0.0, 0.1]);
    assert_eq!(p.len(), 4);
}

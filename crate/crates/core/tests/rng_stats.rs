mod common;

use common::var_se;
use sve_core::paths::{
    generate, inverse_normal_cdf, standard_normal_field, uniform_open, NormalStream, Stream,
};
use sve_core::stats::{ks_test, normal_cdf, SampleSet};

const M: u64 = 100_000;

fn corr_z(a: &[f64], b: &[f64]) -> f64 {
    let m = a.len() as f64;
    let ma = a.iter().sum::<f64>() / m;
    let mb = b.iter().sum::<f64>() / m;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    // under independence the sample correlation has SE 1/√M
    sab / (saa * sbb).sqrt() * m.sqrt()
}

#[test]
fn same_key_same_increments() {
    let a = generate(11, Stream::W, 42, 64, 1.0).unwrap();
    let b = generate(11, Stream::W, 42, 64, 1.0).unwrap();
    assert_eq!(a.increments, b.increments);
    let c = generate(11, Stream::W, 43, 64, 1.0).unwrap();
    assert_ne!(a.increments, c.increments);
}

#[test]
fn w_and_b_streams_are_uncorrelated() {
    let (mut w, mut b) = (Vec::new(), Vec::new());
    for p in 0..M {
        w.push(generate(3, Stream::W, p, 4, 1.0).unwrap().increments[0]);
        b.push(generate(3, Stream::B, p, 4, 1.0).unwrap().increments[0]);
    }
    assert!(corr_z(&w, &b).abs() < 5.0);
}

#[test]
fn terminal_value_has_unit_variance() {
    let ends: Vec<f64> = (0..M)
        .map(|p| {
            generate(5, Stream::W, p, 16, 1.0)
                .unwrap()
                .increments
                .iter()
                .sum()
        })
        .collect();
    let (v, se) = var_se(&ends);
    assert!((v - 1.0).abs() < 5.0 * se, "var {v} se {se}");
}

#[test]
fn normal_field_moments_and_independence() {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for p in 0..M {
        let z = standard_normal_field(9, p, &[3, 700]).unwrap();
        x.push(z[0]);
        y.push(z[1]);
    }
    let (v, se) = var_se(&x);
    assert!((v - 1.0).abs() < 5.0 * se);
    assert!(corr_z(&x, &y).abs() < 5.0);
    assert_eq!(standard_normal_field(9, 17, &[700]).unwrap()[0], y[17]);
}

#[test]
fn normals_pass_ks() {
    let mut s = NormalStream::new(1, Stream::W, 0).unwrap();
    let v: Vec<f64> = (0..M).map(|_| s.next_normal()).collect();
    let set = SampleSet::new("z", 0.0, 1, 1.0, "none", 1, 0, v).unwrap();
    assert!(ks_test(&set, normal_cdf).unwrap().p_value > 1e-3);
}

#[test]
fn seeking_matches_sequential_draws() {
    let mut a = NormalStream::new(8, Stream::Bridge, 5).unwrap();
    let seq: Vec<f64> = (0..50).map(|_| a.next_normal()).collect();
    let mut b = NormalStream::new(8, Stream::Bridge, 5).unwrap();
    b.seek(37);
    assert_eq!(b.next_normal(), seq[37]);
}

#[test]
fn uniforms_stay_inside_and_inverse_is_monotone() {
    assert!(uniform_open(0) > 0.0 && uniform_open(u64::MAX) < 1.0);
    let mut prev = f64::NEG_INFINITY;
    for i in 1..2000 {
        let p = i as f64 / 2000.0;
        let z = inverse_normal_cdf(p);
        assert!(z > prev);
        assert!((normal_cdf(z) - p).abs() < 1e-15);
        prev = z;
    }
}

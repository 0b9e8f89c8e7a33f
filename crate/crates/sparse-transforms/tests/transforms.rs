use kspace_core::{ComplexSlice, Domain, C64};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparse_transforms::prox::psi_abs;
use sparse_transforms::{
    edge_psi, finite_diff, finite_diff_adj, soft_threshold, soft_threshold_real, wavelet_fwd,
    wavelet_fwd_slice, wavelet_inv, wavelet_inv_slice, DiffOperator, TransformError, WaveletSpec,
};

fn random_complex(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n)
        .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect()
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

#[test]
fn wavelet_round_trip_and_energy() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let spec = WaveletSpec::default();
    let x = random_complex(&mut rng, 64 * 32);
    let c = wavelet_fwd(&x, 64, 32, &spec).unwrap();
    assert!((norm(&c) - norm(&x)).abs() < 1e-12 * norm(&x));
    let back = wavelet_inv(&c, 64, 32, &spec).unwrap();
    for (a, b) in back.iter().zip(&x) {
        assert!((a - b).norm() < 1e-12);
    }
}

#[test]
fn constant_image_has_no_detail_energy() {
    let spec = WaveletSpec::default();
    let x = vec![C64::new(0.7, -0.2); 32 * 16];
    let c = wavelet_fwd(&x, 32, 16, &spec).unwrap();
    let detail = spec.detail_mask(32, 16);
    for (v, d) in c.iter().zip(detail) {
        if d {
            assert!(v.norm() < 1e-12);
        }
    }
}

#[test]
fn linear_ramp_has_no_fine_detail_away_from_the_wrap() {
    // two vanishing moments: a ramp is annihilated except where the periodic
    // extension jumps
    let spec = WaveletSpec { levels: 1 };
    let x: Vec<f64> = (0..16 * 8).map(|i| (i % 16) as f64).collect();
    let c = wavelet_fwd(&x, 16, 8, &spec).unwrap();
    for iz in 0..4 {
        for iy in 8..15 {
            assert!(c[iy + 16 * iz].abs() < 1e-12);
        }
    }
}

#[test]
fn slice_wrappers_tag_domains() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let s = ComplexSlice::new([16, 8], random_complex(&mut rng, 128), Domain::Image).unwrap();
    let c = wavelet_fwd_slice(&s, &WaveletSpec::default()).unwrap();
    assert_eq!(c.domain(), Domain::Wavelet);
    let back = wavelet_inv_slice(&c, &WaveletSpec::default()).unwrap();
    assert_eq!(back.domain(), Domain::Image);
    assert!(back
        .data()
        .iter()
        .zip(s.data())
        .all(|(a, b)| (a - b).norm() < 1e-12));
}

#[test]
fn wavelet_rejects_non_divisible_extents() {
    let x = vec![0.0f64; 12 * 8];
    assert!(matches!(
        wavelet_fwd(&x, 12, 8, &WaveletSpec::default()),
        Err(TransformError::NotDivisible {
            extent: 12,
            levels: 3
        })
    ));
}

#[test]
fn ramp_difference_is_one_inside() {
    let shape = [6, 4];
    let x: Vec<f64> = (0..24).map(|i| (i % 6) as f64).collect();
    let d = finite_diff(&x, &shape, &DiffOperator::new(&[0, 1])).unwrap();
    for i in 0..24 {
        let want = if i % 6 < 5 { 1.0 } else { 0.0 };
        assert_eq!(d[0][i], want);
        assert_eq!(d[1][i], 0.0);
    }
}

#[test]
fn constant_field_has_zero_differences() {
    let x = vec![C64::new(2.5, -1.0); 5 * 4 * 3];
    let d = finite_diff(&x, &[5, 4, 3], &DiffOperator::new(&[0, 1, 2])).unwrap();
    assert!(d.iter().flatten().all(|c| c.norm() == 0.0));
}

#[test]
fn diff_rejects_bad_axis() {
    let x = vec![0.0f64; 6];
    assert!(matches!(
        finite_diff(&x, &[3, 2], &DiffOperator::new(&[2])),
        Err(TransformError::Axis { axis: 2, rank: 2 })
    ));
}

#[test]
fn soft_threshold_examples() {
    let out = soft_threshold(
        &[
            C64::new(2.0, 0.0),
            C64::new(0.5, 0.0),
            C64::new(0.0, 2.0),
            C64::new(0.0, 0.0),
        ],
        1.0,
    )
    .unwrap();
    assert_eq!(out[0], C64::new(1.0, 0.0));
    assert_eq!(out[1], C64::new(0.0, 0.0));
    assert!((out[2] - C64::new(0.0, 1.0)).norm() < 1e-15);
    assert_eq!(out[3], C64::new(0.0, 0.0));
    assert!(matches!(
        soft_threshold(&out, -0.1),
        Err(TransformError::NegativeThreshold(_))
    ));
    assert!(soft_threshold_real(&[1.0], f64::NAN).is_err());
}

#[test]
fn psi_examples() {
    let d = 0.005;
    let p0 = edge_psi(C64::new(0.0, 0.0), d).unwrap();
    assert_eq!((p0.value, p0.weight), (0.0, 1.0));
    let pd = edge_psi(C64::new(0.0, d), d).unwrap();
    assert!((pd.value - d * d * (2f64.sqrt() - 1.0)).abs() < 1e-18);
    let x = 100.0 * d;
    let pl = edge_psi(C64::new(x, 0.0), d).unwrap();
    let asym = d * x - d * d;
    assert!(((pl.value - asym) / asym).abs() < 0.0101);
    assert!(edge_psi(C64::new(1.0, 0.0), 0.0).is_err());
}

#[test]
fn psi_weight_is_the_derivative_ratio() {
    let d = 0.005;
    for a in [1e-4f64, 3e-3, 0.02, 0.4] {
        let h = 1e-7 * a.max(1e-3);
        let deriv = (psi_abs(a + h, d).value - psi_abs(a - h, d).value) / (2.0 * h);
        assert!((deriv - a * psi_abs(a, d).weight).abs() < 1e-6 * deriv.abs().max(1e-12));
    }
}

proptest! {
    #[test]
    fn wavelet_is_orthonormal_for_any_levels(
        ly in 0usize..4, lz in 0usize..4, levels in 1usize..4, seed in any::<u64>(),
    ) {
        let ny = 8 << ly;
        let nz = 8 << lz;
        let spec = WaveletSpec { levels };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_complex(&mut rng, ny * nz);
        let c = wavelet_fwd(&x, ny, nz, &spec).unwrap();
        prop_assert!((norm(&c) - norm(&x)).abs() < 1e-12 * norm(&x));
        let back = wavelet_inv(&c, ny, nz, &spec).unwrap();
        prop_assert!(back.iter().zip(&x).all(|(a, b)| (a - b).norm() < 1e-12));
    }

    #[test]
    fn diff_adjoint_identity(
        nx in 1usize..7, ny in 1usize..7, nz in 1usize..5, seed in any::<u64>(), bits in 1u8..8,
    ) {
        let shape = [nx, ny, nz];
        let n = nx * ny * nz;
        let axes: Vec<usize> = (0..3).filter(|a| bits & (1 << a) != 0).collect();
        let op = DiffOperator::new(&axes);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_complex(&mut rng, n);
        let y: Vec<Vec<C64>> = axes.iter().map(|_| random_complex(&mut rng, n)).collect();
        let cx = finite_diff(&x, &shape, &op).unwrap();
        let cty = finite_diff_adj(&y, &shape, &op).unwrap();
        let lhs: C64 = cx.iter().zip(&y).flat_map(|(a, b)| a.iter().zip(b).map(|(p, q)| p * q.conj())).sum();
        let rhs: C64 = x.iter().zip(&cty).map(|(p, q)| p * q.conj()).sum();
        prop_assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn soft_threshold_minimizes_the_prox_objective(re in -3.0f64..3.0, im in -3.0f64..3.0, t in 0.0f64..2.0) {
        let x = C64::new(re, im);
        let u = soft_threshold(&[x], t).unwrap()[0];
        let obj = |v: C64| 0.5 * (v - x).norm_sqr() + t * v.norm();
        let best = obj(u);
        // grid search over a disc around x
        let mut grid_best = f64::INFINITY;
        for i in -60..=60 {
            for j in -60..=60 {
                let v = C64::new(i as f64 * 0.05, j as f64 * 0.05);
                grid_best = grid_best.min(obj(v));
            }
        }
        prop_assert!(best <= grid_best + 1e-12);
        // phase preserved
        if u.norm() > 0.0 {
            prop_assert!((u.arg() - x.arg()).abs() < 1e-12);
        }
    }

    #[test]
    fn operators_commute_with_conjugation(seed in any::<u64>(), t in 0.0f64..0.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_complex(&mut rng, 16 * 8);
        let xc: Vec<C64> = x.iter().map(|c| c.conj()).collect();
        let spec = WaveletSpec { levels: 2 };
        let w = wavelet_fwd(&x, 16, 8, &spec).unwrap();
        let wc = wavelet_fwd(&xc, 16, 8, &spec).unwrap();
        prop_assert!(w.iter().zip(&wc).all(|(a, b)| (a.conj() - b).norm() < 1e-14));
        let s = soft_threshold(&x, t).unwrap();
        let sc = soft_threshold(&xc, t).unwrap();
        prop_assert!(s.iter().zip(&sc).all(|(a, b)| (a.conj() - b).norm() < 1e-14));
        let op = DiffOperator::new(&[0, 1]);
        let d = finite_diff(&x, &[16, 8], &op).unwrap();
        let dc = finite_diff(&xc, &[16, 8], &op).unwrap();
        prop_assert!(d.iter().flatten().zip(dc.iter().flatten()).all(|(a, b)| (a.conj() - b).norm() < 1e-14));
    }

    #[test]
    fn psi_is_even_convex_and_tends_to_delta_slope(a in 0.0f64..1.0, b in 0.0f64..1.0, lam in 0.0f64..1.0) {
        let d = 0.005;
        prop_assert_eq!(psi_abs(a, d).value, edge_psi(C64::new(-a, 0.0), d).unwrap().value);
        let mid = psi_abs(lam * a + (1.0 - lam) * b, d).value;
        prop_assert!(mid <= lam * psi_abs(a, d).value + (1.0 - lam) * psi_abs(b, d).value + 1e-15);
        let big = 1e6 * d;
        prop_assert!((psi_abs(big, d).value / big - d).abs() < 1e-6 * d);
    }
}

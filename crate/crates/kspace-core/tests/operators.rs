use kspace_core::{
    adjoint_model, centered_dft, forward_model, realize_mask, slice_decompose, slice_recompose,
    zero_fill_recon, ComplexSlice, ComplexVolume, Domain, KspaceError, MaskSpec, RealVolume,
    SamplingMask, C64,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_volume(rng: &mut ChaCha8Rng, shape: [usize; 3], domain: Domain) -> ComplexVolume {
    let n = shape.iter().product();
    let data = (0..n)
        .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    ComplexVolume::new(shape, data, domain).unwrap()
}

fn small_spec(af: f64, seed: u64) -> MaskSpec {
    MaskSpec {
        pa: kspace_core::mask::published_pa(af),
        pb: 1.8,
        af,
        ny: 16,
        nz: 8,
        calib: [2, 1],
        seed,
    }
}

fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

#[test]
fn centered_impulse_transforms_to_flat_spectrum() {
    let mut v = vec![C64::new(0.0, 0.0); 8];
    v[4] = C64::new(1.0, 0.0);
    centered_dft(&mut v, &[8], &[0], false).unwrap();
    for c in &v {
        assert!((c - C64::new(1.0 / 8f64.sqrt(), 0.0)).norm() < 1e-15);
    }
}

#[test]
fn inverse_pair_and_parseval() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let v = random_volume(&mut rng, [16, 12, 10], Domain::Image);
    let k = v.dft_centered(&[0, 1, 2]).unwrap();
    assert_eq!(k.domain(), Domain::Kspace);
    assert!(((k.norm() - v.norm()) / v.norm()).abs() < 1e-12);
    let back = k.idft_centered(&[0, 1, 2]).unwrap();
    assert_eq!(back.domain(), Domain::Image);
    let err: f64 = back
        .data()
        .iter()
        .zip(v.data())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    assert!(err / v.norm() < 1e-12);
}

#[test]
fn partial_transform_keeps_domain() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let v = random_volume(&mut rng, [4, 4, 4], Domain::Image);
    assert_eq!(v.dft_centered(&[1]).unwrap().domain(), Domain::Image);
    assert!(matches!(
        v.dft_centered(&[3]),
        Err(KspaceError::Axis { axis: 3, rank: 3 })
    ));
}

#[test]
fn constant_image_maps_to_scaled_dc_impulse() {
    let shape = [8, 6, 4];
    let n = 8 * 6 * 4;
    let m = RealVolume::new(shape, vec![1.0; n]).unwrap();
    let phi = RealVolume::zeros(shape).unwrap();
    let full = SamplingMask::full(6, 4).unwrap();
    let y = forward_model(&m, &phi, &full).unwrap();
    let dc = y.index(4, 3, 2);
    for (i, c) in y.data().iter().enumerate() {
        let want = if i == dc { (n as f64).sqrt() } else { 0.0 };
        assert!((c - C64::new(want, 0.0)).norm() < 1e-12, "sample {i}");
    }
}

#[test]
fn global_phase_offset_multiplies_kspace() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let shape = [8, 16, 8];
    let n = 8 * 16 * 8;
    let m = RealVolume::new(shape, (0..n).map(|_| rng.random()).collect()).unwrap();
    let phi = RealVolume::new(
        shape,
        (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect(),
    )
    .unwrap();
    let theta = 0.7;
    let phi2 = RealVolume::new(shape, phi.data().iter().map(|p| p + theta).collect()).unwrap();
    let mask = realize_mask(&small_spec(2.0, 1)).unwrap();
    let y1 = forward_model(&m, &phi, &mask).unwrap();
    let y2 = forward_model(&m, &phi2, &mask).unwrap();
    let rot = C64::from_polar(1.0, theta);
    for (a, b) in y1.data().iter().zip(y2.data()) {
        assert!((a * rot - b).norm() < 1e-12);
    }
}

#[test]
fn unsampled_lines_are_exactly_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let shape = [8, 16, 8];
    let n = 8 * 16 * 8;
    let m = RealVolume::new(shape, (0..n).map(|_| rng.random()).collect()).unwrap();
    let phi = RealVolume::new(shape, (0..n).map(|_| rng.random()).collect()).unwrap();
    let mask = realize_mask(&small_spec(4.0, 9)).unwrap();
    let y = forward_model(&m, &phi, &mask).unwrap();
    for z in 0..8 {
        for yy in 0..16 {
            if !mask.is_sampled(yy, z) {
                for x in 0..8 {
                    assert_eq!(y.data()[y.index(x, yy, z)], C64::new(0.0, 0.0));
                }
            }
        }
    }
}

#[test]
fn zero_fill_with_full_mask_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let shape = [8, 8, 4];
    let n = 8 * 8 * 4;
    let m = RealVolume::new(shape, (0..n).map(|_| rng.random()).collect()).unwrap();
    let phi = RealVolume::new(
        shape,
        (0..n).map(|_| rng.random::<f64>() * 6.0 - 3.0).collect(),
    )
    .unwrap();
    let full = SamplingMask::full(8, 4).unwrap();
    let y = forward_model(&m, &phi, &full).unwrap();
    let zf = zero_fill_recon(&y, &full).unwrap();
    let truth = ComplexVolume::from_polar(&m, &phi).unwrap();
    for (a, b) in zf.data().iter().zip(truth.data()) {
        assert!((a - b).norm() < 1e-12);
    }
}

#[test]
fn zero_fill_of_zero_is_zero_and_off_mask_energy_is_rejected() {
    let mask = realize_mask(&small_spec(4.0, 2)).unwrap();
    let y = ComplexVolume::zeros([4, 16, 8], Domain::Kspace).unwrap();
    let zf = zero_fill_recon(&y, &mask).unwrap();
    assert!(zf.data().iter().all(|c| c.norm() == 0.0));

    let mut bad = y.clone();
    let (iy, iz) = (0..16 * 8)
        .map(|l| (l % 16, l / 16))
        .find(|&(a, b)| !mask.is_sampled(a, b))
        .unwrap();
    let i = bad.index(1, iy, iz);
    bad.data_mut()[i] = C64::new(1e-3, 0.0);
    assert!(matches!(zero_fill_recon(&bad, &mask), Err(KspaceError::OffMaskEnergy(j)) if j == i));
}

#[test]
fn mask_plane_must_match_volume() {
    let mask = realize_mask(&small_spec(4.0, 2)).unwrap();
    let m = RealVolume::zeros([4, 8, 16]).unwrap();
    assert!(matches!(
        forward_model(&m, &m, &mask),
        Err(KspaceError::Shape(_))
    ));
}

#[test]
fn slice_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let y = random_volume(&mut rng, [8, 6, 4], Domain::Kspace);
    let slices = slice_decompose(&y).unwrap();
    assert_eq!(slices.len(), 8);
    assert!(slices
        .iter()
        .all(|s| s.shape() == [6, 4] && s.domain() == Domain::Kspace));
    let back = slice_recompose(&slices).unwrap();
    for (a, b) in back.data().iter().zip(y.data()) {
        assert!((a - b).norm() < 1e-12);
    }
}

#[test]
fn single_kx_plane_decomposes_into_phase_ramped_copies() {
    let (nx, ny, nz) = (8usize, 4usize, 2usize);
    let mut y = ComplexVolume::zeros([nx, ny, nz], Domain::Kspace).unwrap();
    let kx = 6;
    let plane: Vec<C64> = (0..ny * nz)
        .map(|l| C64::new(l as f64 + 1.0, 0.5 * l as f64))
        .collect();
    for (l, &c) in plane.iter().enumerate() {
        let i = kx + nx * l;
        y.data_mut()[i] = c;
    }
    let slices = slice_decompose(&y).unwrap();
    let c = (nx / 2) as f64;
    for (x, s) in slices.iter().enumerate() {
        let ramp = C64::from_polar(
            1.0 / (nx as f64).sqrt(),
            2.0 * std::f64::consts::PI * (kx as f64 - c) * (x as f64 - c) / nx as f64,
        );
        for (a, b) in s.data().iter().zip(&plane) {
            assert!((a - b * ramp).norm() < 1e-12);
        }
    }
}

#[test]
fn slices_reject_ragged_input() {
    let a = ComplexSlice::zeros([4, 2], Domain::Kspace).unwrap();
    let b = ComplexSlice::zeros([2, 4], Domain::Kspace).unwrap();
    assert!(slice_recompose(&[a, b]).is_err());
    assert!(slice_recompose(&[]).is_err());
}

#[test]
fn adjoint_identity_over_random_trials() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..100 {
        let shape = [
            rng.random_range(2..10),
            rng.random_range(4..14),
            rng.random_range(4..10),
        ];
        let af = [1.0, 2.0, 4.0][trial % 3];
        let spec = MaskSpec {
            pa: 5.0,
            pb: 1.8,
            af,
            ny: shape[1],
            nz: shape[2],
            calib: [1, 1],
            seed: trial as u64,
        };
        let mask = realize_mask(&spec).unwrap();
        let x = random_volume(&mut rng, shape, Domain::Image);
        let mut y = random_volume(&mut rng, shape, Domain::Kspace);
        kspace_core::apply_mask(&mut y, &mask).unwrap();
        let mut ax = x.dft_centered(&[0, 1, 2]).unwrap();
        kspace_core::apply_mask(&mut ax, &mask).unwrap();
        let aty = adjoint_model(&y, &mask).unwrap();
        let lhs = inner(ax.data(), y.data());
        let rhs = inner(x.data(), aty.data());
        assert!(
            (lhs - rhs).norm() <= 1e-10 * x.norm() * y.norm(),
            "trial {trial}"
        );
    }
}

#[test]
fn rejects_non_finite_and_bad_lengths() {
    assert!(matches!(
        ComplexVolume::new(
            [1, 1, 2],
            vec![C64::new(0.0, 0.0), C64::new(f64::NAN, 0.0)],
            Domain::Image
        ),
        Err(KspaceError::NonFinite(1))
    ));
    assert!(ComplexVolume::new([2, 2, 2], vec![C64::new(0.0, 0.0); 7], Domain::Image).is_err());
    assert!(ComplexVolume::zeros([0, 2, 2], Domain::Image).is_err());
}

proptest! {
    #[test]
    fn parseval_holds_on_any_axis_subset(
        nx in 1usize..7, ny in 1usize..7, nz in 1usize..7,
        mask_bits in 1u8..8, seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = random_volume(&mut rng, [nx, ny, nz], Domain::Image);
        let axes: Vec<usize> = (0..3).filter(|a| mask_bits & (1 << a) != 0).collect();
        let k = v.dft_centered(&axes).unwrap();
        prop_assert!(((k.norm() - v.norm()) / v.norm()).abs() < 1e-12);
        let back = k.idft_centered(&axes).unwrap();
        for (a, b) in back.data().iter().zip(v.data()) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }
}

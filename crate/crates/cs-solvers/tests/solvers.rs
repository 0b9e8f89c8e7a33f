use cs_solvers::problem::Problem;
use cs_solvers::trace::{read_trace, write_trace};
use cs_solvers::volume::complex_psnr;
use cs_solvers::{
    gen_phase_shifts, lowres_phase, recon_cspc, recon_cspr, recon_magnitude_cs, recon_volume,
    Method, PhaseShiftSet, SolverConfig,
};
use kspace_core::{
    dft2_centered, realize_mask, ComplexSlice, ComplexVolume, Domain, MaskSpec, SamplingMask, C64,
};
use proptest::prelude::*;

/// Smooth elliptical object with a quadratic phase that wraps once.
fn phantom(ny: usize, nz: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(ny * nz);
    for iz in 0..nz {
        for iy in 0..ny {
            let u = (iy as f64 - ny as f64 / 2.0) / (0.4 * ny as f64);
            let v = (iz as f64 - nz as f64 / 2.0) / (0.35 * nz as f64);
            let r2 = u * u + v * v;
            let m = if r2 < 1.0 {
                0.6 + 0.4 * (1.0 - r2)
            } else {
                0.0
            };
            let inner = ((u - 0.3).powi(2) + v * v) < 0.05;
            let m = if inner { 1.0 } else { m };
            let phi = 4.0 * r2 - 1.0 + 0.5 * u;
            out.push(C64::from_polar(m, phi));
        }
    }
    out
}

fn kspace(x: &[C64], ny: usize, nz: usize, mask: &SamplingMask) -> ComplexSlice {
    let mut k = x.to_vec();
    dft2_centered(&mut k, ny, nz, false);
    for (c, &s) in k.iter_mut().zip(mask.plane()) {
        if !s {
            *c = C64::new(0.0, 0.0);
        }
    }
    ComplexSlice::new([ny, nz], k, Domain::Kspace).unwrap()
}

fn mask(ny: usize, nz: usize, af: f64, seed: u64) -> SamplingMask {
    let spec = MaskSpec {
        pa: kspace_core::mask::published_pa(af),
        pb: 1.8,
        af,
        ny,
        nz,
        calib: [4, 2],
        seed,
    };
    realize_mask(&spec).unwrap()
}

fn unregularized() -> SolverConfig {
    SolverConfig {
        lambda1: 0.0,
        lambda2: 0.0,
        max_outer: 10,
        ..SolverConfig::default()
    }
}

fn assert_nonincreasing(h: &[cs_solvers::CostTerms]) {
    for w in h.windows(2) {
        assert!(
            w[1].total <= w[0].total + 1e-9,
            "{} -> {}",
            w[0].total,
            w[1].total
        );
    }
}

#[test]
fn full_sampling_without_regularization_is_exact() {
    let (ny, nz) = (32, 16);
    let x = phantom(ny, nz);
    let full = SamplingMask::full(ny, nz).unwrap();
    let y = kspace(&x, ny, nz, &full);
    let cfg = unregularized();

    let phi: Vec<f64> = x.iter().map(|c| c.arg()).collect();
    let mag = recon_magnitude_cs(&y, &full, &phi, &cfg).unwrap();
    for (a, b) in mag.magnitude.iter().zip(&x) {
        assert!((a - b.norm()).abs() < 1e-10);
    }

    let pr = recon_cspr(&y, &full, &cfg).unwrap().image();
    let shifts = gen_phase_shifts(&pr, 4, 1).unwrap();
    let pc = recon_cspc(&y, &full, &cfg, &shifts).unwrap().image();
    for img in [pr, pc] {
        for (a, b) in img.data().iter().zip(&x) {
            assert!((a - b).norm() < 1e-10);
        }
    }
}

#[test]
fn cost_histories_are_monotone() {
    let (ny, nz) = (32, 32);
    let x = phantom(ny, nz);
    let m = mask(ny, nz, 4.0, 3);
    let y = kspace(&x, ny, nz, &m);
    let cfg = SolverConfig {
        lambda1: 5e-3,
        lambda2: 5e-3,
        max_outer: 40,
        ..SolverConfig::default()
    };

    let phi = lowres_phase(&y, &m).unwrap();
    let mag = recon_magnitude_cs(&y, &m, &phi, &cfg).unwrap();
    assert!(mag.magnitude.iter().all(|&a| a >= 0.0));
    assert_nonincreasing(&mag.history);

    let pr = recon_cspr(&y, &m, &cfg).unwrap();
    assert_nonincreasing(&pr.history);
    assert!(pr.history.len() > 1);

    let zf = ComplexSlice::new(
        [ny, nz],
        Problem::new(&y, &m).unwrap().zero_fill(),
        Domain::Image,
    )
    .unwrap();
    let pc = recon_cspc(&y, &m, &cfg, &gen_phase_shifts(&zf, 8, 7).unwrap()).unwrap();
    assert_nonincreasing(&pc.history);
    for o in [&pr, &pc] {
        assert!(o.magnitude.iter().all(|&a| a >= 0.0));
        assert!(o
            .phase
            .iter()
            .all(|&p| p > -std::f64::consts::PI && p <= std::f64::consts::PI));
    }
}

#[test]
fn final_data_residual_is_bounded_by_the_initial_cost() {
    let (ny, nz) = (32, 32);
    let x = phantom(ny, nz);
    let m = mask(ny, nz, 4.0, 5);
    let y = kspace(&x, ny, nz, &m);
    let cfg = SolverConfig {
        max_outer: 30,
        ..SolverConfig::default()
    };
    let p = Problem::new(&y, &m).unwrap();
    let pr = recon_cspr(&y, &m, &cfg).unwrap();
    assert!(p.data_term(pr.image().data()) <= pr.history[0].total * (1.0 + 1e-12));
    let zf = ComplexSlice::new([ny, nz], p.zero_fill(), Domain::Image).unwrap();
    let pc = recon_cspc(&y, &m, &cfg, &gen_phase_shifts(&zf, 4, 2).unwrap()).unwrap();
    assert!(p.data_term(pc.image().data()) <= pc.history[0].total * (1.0 + 1e-12));
}

#[test]
fn solvers_are_deterministic() {
    let (ny, nz) = (16, 16);
    let x = phantom(ny, nz);
    let m = mask(ny, nz, 2.0, 9);
    let y = kspace(&x, ny, nz, &m);
    let cfg = SolverConfig {
        max_outer: 15,
        ..SolverConfig::default()
    };
    assert_eq!(
        recon_cspr(&y, &m, &cfg).unwrap(),
        recon_cspr(&y, &m, &cfg).unwrap()
    );
    let s = gen_phase_shifts(&y, 5, 11).unwrap();
    assert_eq!(s, gen_phase_shifts(&y, 5, 11).unwrap());
    assert_eq!(
        recon_cspc(&y, &m, &cfg, &s).unwrap(),
        recon_cspc(&y, &m, &cfg, &s).unwrap()
    );
}

#[test]
fn shift_sets() {
    let zf = ComplexSlice::zeros([8, 8], Domain::Image).unwrap();
    let one = gen_phase_shifts(&zf, 1, 3).unwrap();
    assert_eq!(one.count(), 1);
    assert!(one.shifts()[0].iter().all(|&v| v == 0.0));
    assert!(gen_phase_shifts(&zf, 0, 3).is_err());

    let set = gen_phase_shifts(&zf, 8, 7).unwrap();
    let offsets: Vec<f64> = set.shifts().iter().map(|f| f[0]).collect();
    assert!(set.shifts().iter().all(|f| f.iter().all(|&v| v == f[0])));
    let frozen = [
        0.0,
        -2.150130535259553,
        -2.086084357657665,
        1.2835047662861987,
        1.4246575840396343,
        0.6362291570536875,
        -0.8836397309382034,
        -2.6197142551571,
    ];
    assert_eq!(offsets, frozen);
    assert!(offsets
        .iter()
        .all(|&o| (-std::f64::consts::PI..std::f64::consts::PI).contains(&o)));
}

#[test]
fn cspc_rejects_mismatched_shifts() {
    let m = SamplingMask::full(8, 8).unwrap();
    let y = ComplexSlice::zeros([8, 8], Domain::Kspace).unwrap();
    let s = PhaseShiftSet::constant([8, 4], &[0.0], 0).unwrap();
    assert!(recon_cspc(&y, &m, &SolverConfig::default(), &s).is_err());
    let bad = SolverConfig {
        step_scale: 1.5,
        ..SolverConfig::default()
    };
    assert!(recon_cspr(&y, &m, &bad).is_err());
}

#[test]
fn trace_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    let (ny, nz) = (16, 16);
    let x = phantom(ny, nz);
    let m = mask(ny, nz, 2.0, 1);
    let y = kspace(&x, ny, nz, &m);
    let out = recon_cspr(
        &y,
        &m,
        &SolverConfig {
            max_outer: 5,
            ..SolverConfig::default()
        },
    )
    .unwrap();
    write_trace(&path, &out.history).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("iteration,data_term,reg_m,reg_phi,total\n0,"));
    assert_eq!(read_trace(&path).unwrap(), out.history);
}

#[test]
fn volume_recon_matches_per_slice_solves() {
    let (nx, ny, nz) = (4, 16, 16);
    let base = phantom(ny, nz);
    let mut img = ComplexVolume::zeros([nx, ny, nz], Domain::Image).unwrap();
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let i = img.index(x, y, z);
                img.data_mut()[i] = base[y + ny * z] * (1.0 + 0.1 * x as f64);
            }
        }
    }
    let m = mask(ny, nz, 2.0, 4);
    let mut k = img.dft_centered(&[0, 1, 2]).unwrap();
    kspace_core::apply_mask(&mut k, &m).unwrap();
    let cfg = SolverConfig {
        max_outer: 8,
        ..SolverConfig::default()
    };

    let zf = recon_volume(&k, &m, Method::ZeroFill, &cfg).unwrap();
    let direct = kspace_core::zero_fill_recon(&k, &m).unwrap();
    assert!(zf
        .image
        .data()
        .iter()
        .zip(direct.data())
        .all(|(a, b)| (a - b).norm() < 1e-12));

    let vol = recon_volume(&k, &m, Method::Cspr, &cfg).unwrap();
    let slices = kspace_core::slice_decompose(&k).unwrap();
    let mut total0 = 0.0;
    for (x, s) in slices.iter().enumerate() {
        let o = recon_cspr(s, &m, &cfg).unwrap();
        total0 += o.history[0].total;
        let img = o.image();
        for z in 0..nz {
            for y in 0..ny {
                assert_eq!(
                    vol.image.data()[vol.image.index(x, y, z)],
                    img.data()[y + ny * z]
                );
            }
        }
    }
    assert!((vol.history[0].total - total0).abs() < 1e-12 * total0);
    for method in [Method::MagnitudeCs, Method::Cspc { shifts: 4, seed: 2 }] {
        let a = recon_volume(&k, &m, method, &cfg).unwrap();
        let b = recon_volume(&k, &m, method, &cfg).unwrap();
        assert_eq!(a.image, b.image);
    }
}

#[test]
fn magnitude_cs_with_true_phase_beats_zero_fill_on_an_incoherent_mask() {
    let (ny, nz) = (32, 32);
    let x = phantom(ny, nz);
    let m = realize_mask(&MaskSpec {
        pa: 0.5,
        pb: 1.8,
        af: 2.5,
        ny,
        nz,
        calib: [4, 2],
        seed: 8,
    })
    .unwrap();
    let y = kspace(&x, ny, nz, &m);
    let zf = Problem::new(&y, &m).unwrap().zero_fill();
    let phi: Vec<f64> = x.iter().map(|c| c.arg()).collect();
    let cfg = SolverConfig {
        max_outer: 100,
        ..SolverConfig::default()
    };
    let out = recon_magnitude_cs(&y, &m, &phi, &cfg).unwrap();
    assert!(complex_psnr(out.image().data(), &x) > complex_psnr(&zf, &x) + 5.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn cspc_is_equivariant_to_global_phase(theta in -3.1f64..3.1, seed in 0u64..1000) {
        let (ny, nz) = (16, 16);
        let x = phantom(ny, nz);
        let m = mask(ny, nz, 2.0, seed);
        let rot = C64::from_polar(1.0, theta);
        let xr: Vec<C64> = x.iter().map(|c| c * rot).collect();
        let y1 = kspace(&x, ny, nz, &m);
        let y2 = kspace(&xr, ny, nz, &m);
        let cfg = SolverConfig { max_outer: 20, ..SolverConfig::default() };
        let s = gen_phase_shifts(&y1, 4, seed).unwrap();
        let a = recon_cspc(&y1, &m, &cfg, &s).unwrap();
        let b = recon_cspc(&y2, &m, &cfg, &s).unwrap();
        for (p, q) in a.magnitude.iter().zip(&b.magnitude) {
            prop_assert!((p - q).abs() < 1e-6);
        }
        let d = cs_solvers::problem::wrap(b.global_offset - a.global_offset - theta);
        prop_assert!(d.abs() < 1e-9);
    }

    #[test]
    fn cspc_magnitude_ignores_a_common_shift_offset(c in -3.0f64..3.0, seed in 0u64..1000) {
        let (ny, nz) = (16, 16);
        let x = phantom(ny, nz);
        let m = mask(ny, nz, 2.0, seed);
        let y = kspace(&x, ny, nz, &m);
        let cfg = SolverConfig { max_outer: 20, ..SolverConfig::default() };
        let s = gen_phase_shifts(&y, 6, seed).unwrap();
        let a = recon_cspc(&y, &m, &cfg, &s).unwrap();
        let b = recon_cspc(&y, &m, &cfg, &s.offset_by(c)).unwrap();
        for (p, q) in a.magnitude.iter().zip(&b.magnitude) {
            prop_assert!((p - q).abs() < 1e-8);
        }
    }
}

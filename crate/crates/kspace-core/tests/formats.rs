use kspace_core::io::{
    decode_cvol, decode_mask, encode_cvol, encode_mask, read_cvol, read_mask, write_cvol,
    write_mask,
};
use kspace_core::{realize_mask, ComplexVolume, Domain, KspaceError, MaskSpec, C64};

fn sample_volume() -> ComplexVolume {
    let data = (0..24)
        .map(|i| C64::new(i as f64 * 0.25, -(i as f64) * 0.5))
        .collect();
    ComplexVolume::new([4, 3, 2], data, Domain::Kspace).unwrap()
}

#[test]
fn cvol_header_layout() {
    let bytes = encode_cvol(&sample_volume(), None).unwrap();
    let nl = bytes.iter().position(|&b| b == b'\n').unwrap();
    assert_eq!(
        std::str::from_utf8(&bytes[..nl]).unwrap(),
        r#"{"shape":[4,3,2],"dtype":"c64le","layout":"x-fastest","domain":"kspace"}"#
    );
    assert_eq!(bytes.len(), nl + 1 + 24 * 8);
    // second sample: re = 0.25, im = -0.5
    assert_eq!(&bytes[nl + 9..nl + 13], &0.25f32.to_le_bytes());
    assert_eq!(&bytes[nl + 13..nl + 17], &(-0.5f32).to_le_bytes());
}

#[test]
fn cvol_round_trip_with_units() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("chi.cvol");
    let v = sample_volume();
    write_cvol(&path, &v, Some("ppm")).unwrap();
    let (back, units) = read_cvol(&path).unwrap();
    assert_eq!(units.as_deref(), Some("ppm"));
    assert_eq!(back, v);
}

#[test]
fn cvol_truncated_payload_is_a_format_error() {
    let mut bytes = encode_cvol(&sample_volume(), None).unwrap();
    bytes.pop();
    assert!(matches!(decode_cvol(&bytes), Err(KspaceError::Format(_))));
    assert!(matches!(decode_cvol(b"{}"), Err(KspaceError::Format(_))));
}

#[test]
fn mask_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.mask");
    let m = realize_mask(&MaskSpec::published(4.0, 32, 16, 42).unwrap()).unwrap();
    write_mask(&path, &m).unwrap();
    assert_eq!(read_mask(&path).unwrap(), m);
    let bytes = encode_mask(&m).unwrap();
    let nl = bytes.iter().position(|&b| b == b'\n').unwrap();
    assert_eq!(
        std::str::from_utf8(&bytes[..nl]).unwrap(),
        r#"{"shape":[32,16],"spec":{"Pa":12.0,"Pb":1.8,"af":4.0,"calib":[6,3],"seed":42}}"#
    );
}

#[test]
fn mask_with_wrong_count_is_rejected() {
    let m = realize_mask(&MaskSpec::published(4.0, 32, 16, 42).unwrap()).unwrap();
    let mut bytes = encode_mask(&m).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 1;
    assert!(decode_mask(&bytes).is_err());
    bytes[last] = 7;
    assert!(matches!(decode_mask(&bytes), Err(KspaceError::Format(_))));
}

#[test]
fn failed_write_leaves_no_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.cvol");
    let r = kspace_core::io::write_atomic(&path, |_| Err(KspaceError::Format("boom".into())));
    assert!(r.is_err());
    assert!(!path.exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

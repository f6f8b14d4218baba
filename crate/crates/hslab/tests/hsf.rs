use hslab::grid::{random_boundary, random_field, BoundarySpec, GridSpec};
use hslab::io::{boundary_to_bytes, field_to_bytes, parse_hsf, read_hsf, write_field};

fn spec() -> GridSpec {
    GridSpec::new(2, 1, 4.0, 8, 0.1, 1.0, 5).unwrap()
}

fn split(bytes: &[u8]) -> (serde_json::Value, Vec<u8>) {
    let nl = bytes.iter().position(|&b| b == b'\n').unwrap();
    (serde_json::from_slice(&bytes[..nl]).unwrap(), bytes[nl + 1..].to_vec())
}

fn join(h: &serde_json::Value, payload: &[u8]) -> Vec<u8> {
    let mut out = serde_json::to_vec(h).unwrap();
    out.push(b'\n');
    out.extend_from_slice(payload);
    out
}

#[test]
fn file_round_trip_is_bit_exact() {
    let f = random_field(&spec(), 2, 11, 0.5);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("f.hsf");
    write_field(&p, &f).unwrap();
    let back = read_hsf(&p).unwrap().into_field().unwrap();
    assert_eq!(field_to_bytes(&back), std::fs::read(&p).unwrap());
    assert!(back.values().iter().zip(f.values()).all(|(a, b)| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits()));
}

#[test]
fn boundary_round_trip() {
    let g = random_boundary(&BoundarySpec { n: 1, l: 3.0, nx: 10 }, 2, 4);
    let bytes = boundary_to_bytes(&g, 1);
    let back = parse_hsf(&bytes).unwrap().into_boundary().unwrap();
    assert_eq!(back, g);
    assert!(parse_hsf(&bytes).unwrap().into_field().is_err());
}

#[test]
fn truncated_payload_names_offset() {
    let bytes = field_to_bytes(&random_field(&spec(), 1, 1, 0.0));
    let cut = &bytes[..bytes.len() - 24];
    let msg = parse_hsf(cut).unwrap_err().to_string();
    assert!(msg.contains("truncated"), "{msg}");
    assert!(msg.contains(&format!("offset {}", cut.len())), "{msg}");
}

#[test]
fn excess_payload_is_rejected() {
    let mut bytes = field_to_bytes(&random_field(&spec(), 1, 1, 0.0));
    let len = bytes.len();
    bytes.extend_from_slice(&[0u8; 16]);
    let msg = parse_hsf(&bytes).unwrap_err().to_string();
    assert!(msg.contains(&format!("offset {len}")), "{msg}");
}

#[test]
fn header_dimension_mismatch_is_rejected() {
    let bytes = field_to_bytes(&random_field(&spec(), 1, 1, 0.0));
    let (mut h, payload) = split(&bytes);
    h["n"] = serde_json::json!(3);
    assert!(parse_hsf(&join(&h, &payload)).is_err());
    h["n"] = serde_json::json!(1);
    assert!(parse_hsf(&join(&h, &payload)).is_err());
}

#[test]
fn big_endian_is_rejected() {
    let bytes = field_to_bytes(&random_field(&spec(), 1, 1, 0.0));
    let (mut h, payload) = split(&bytes);
    h["byte_order"] = serde_json::json!("BE");
    let msg = parse_hsf(&join(&h, &payload)).unwrap_err().to_string();
    assert!(msg.contains("byte order"), "{msg}");
}

#[test]
fn missing_header_is_rejected() {
    assert!(parse_hsf(b"not a header").is_err());
}

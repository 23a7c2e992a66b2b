#![allow(dead_code)]

use std::process::Command;

use num_complex::Complex;

pub struct Output {
    pub ok: bool,
    pub code: Option<i32>,
    pub stdout: String,
    pub stderr: String,
}

pub fn imphy(args: &[&str]) -> Output {
    imphy_env(args, &[])
}

pub fn imphy_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_imphy"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("run imphy");
    Output {
        ok: out.status.success(),
        code: out.status.code(),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

/// Header-keyed rows of a CSV document.
pub fn csv(text: &str) -> Vec<Vec<(String, String)>> {
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    lines.map(|l| header.iter().cloned().zip(l.split(',').map(String::from)).collect()).collect()
}

pub fn field<'a>(row: &'a [(String, String)], key: &str) -> &'a str {
    &row.iter().find(|(k, _)| k == key).unwrap_or_else(|| panic!("no column {key}")).1
}

/// Parses the exact forms used in the transmission-vector table:
/// `0`, `±1`, `±j`, `±1/√2`, `±j/√2`, `(±1±j)/√2`.
pub fn parse_exact(s: &str) -> Complex<f64> {
    let (body, scale) = match s.strip_suffix("/√2") {
        Some(b) => (b.trim_start_matches('(').trim_end_matches(')'), 0.5f64.sqrt()),
        None => (s, 1.0),
    };
    let z = match body {
        "0" => Complex::new(0.0, 0.0),
        "1" => Complex::new(1.0, 0.0),
        "-1" => Complex::new(-1.0, 0.0),
        "j" => Complex::new(0.0, 1.0),
        "-j" => Complex::new(0.0, -1.0),
        "1+j" => Complex::new(1.0, 1.0),
        "1-j" => Complex::new(1.0, -1.0),
        "-1+j" => Complex::new(-1.0, 1.0),
        "-1-j" => Complex::new(-1.0, -1.0),
        other => panic!("not an exact form: {other}"),
    };
    z * scale
}

/// Transmission vectors for 4 bpcu and two transmit antennas, as tabulated:
/// (bits, SM, ESM, QSM).
pub const GOLDEN_CODEBOOKS: [(&str, [&str; 2], [&str; 2], [&str; 2]); 16] = [
    ("0000", ["1", "0"], ["(1+j)/√2", "0"], ["(1+j)/√2", "0"]),
    ("0001", ["(1+j)/√2", "0"], ["(-1+j)/√2", "0"], ["(-1+j)/√2", "0"]),
    ("0010", ["j", "0"], ["(-1-j)/√2", "0"], ["(-1-j)/√2", "0"]),
    ("0011", ["(-1+j)/√2", "0"], ["(1-j)/√2", "0"], ["(1-j)/√2", "0"]),
    ("0100", ["-1", "0"], ["0", "(1+j)/√2"], ["1/√2", "j/√2"]),
    ("0101", ["(-1-j)/√2", "0"], ["0", "(-1+j)/√2"], ["-1/√2", "j/√2"]),
    ("0110", ["-j", "0"], ["0", "(-1-j)/√2"], ["-1/√2", "-j/√2"]),
    ("0111", ["(1-j)/√2", "0"], ["0", "(1-j)/√2"], ["1/√2", "-j/√2"]),
    ("1000", ["0", "1"], ["1/√2", "1/√2"], ["j/√2", "1/√2"]),
    ("1001", ["0", "(1+j)/√2"], ["1/√2", "-1/√2"], ["j/√2", "-1/√2"]),
    ("1010", ["0", "j"], ["-1/√2", "1/√2"], ["-j/√2", "-1/√2"]),
    ("1011", ["0", "(-1+j)/√2"], ["-1/√2", "-1/√2"], ["-j/√2", "1/√2"]),
    ("1100", ["0", "-1"], ["j/√2", "j/√2"], ["0", "(1+j)/√2"]),
    ("1101", ["0", "(-1-j)/√2"], ["j/√2", "-j/√2"], ["0", "(-1+j)/√2"]),
    ("1110", ["0", "-j"], ["-j/√2", "j/√2"], ["0", "(-1-j)/√2"]),
    ("1111", ["0", "(1-j)/√2"], ["-j/√2", "-j/√2"], ["0", "(1-j)/√2"]),
];

/// Checks one scheme's `codebook` output against a table column; returns
/// the number of matching vectors.
pub fn table_column_matches(stdout: &str, column: usize) -> usize {
    let rows = csv(stdout);
    assert_eq!(rows.len(), 16);
    let mut matched = 0;
    for (row, golden) in rows.iter().zip(GOLDEN_CODEBOOKS.iter()) {
        let want = match column {
            0 => golden.1,
            1 => golden.2,
            _ => golden.3,
        };
        let exact = field(row, "bits") == golden.0 && field(row, "x1") == want[0] && field(row, "x2") == want[1];
        let numeric = (0..2).all(|t| {
            let re: f64 = field(row, &format!("x{}_re", t + 1)).parse().unwrap();
            let im: f64 = field(row, &format!("x{}_im", t + 1)).parse().unwrap();
            (Complex::new(re, im) - parse_exact(want[t])).norm() < 1e-12
        });
        matched += (exact && numeric) as usize;
    }
    matched
}

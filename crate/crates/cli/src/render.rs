//! Exact-form rendering of codebook entries.

use std::f64::consts::FRAC_1_SQRT_2;

use imphy::fmt::sig12;
use num_complex::Complex;

const TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Part {
    Zero,
    /// ±1, flag set when divided by √2.
    Unit { negative: bool, root2: bool },
    Other(f64),
}

fn classify(v: f64) -> Part {
    if v.abs() < TOL {
        Part::Zero
    } else if (v.abs() - 1.0).abs() < TOL {
        Part::Unit { negative: v < 0.0, root2: false }
    } else if (v.abs() - FRAC_1_SQRT_2).abs() < TOL {
        Part::Unit { negative: v < 0.0, root2: true }
    } else {
        Part::Other(v)
    }
}

fn sign(negative: bool) -> &'static str {
    if negative {
        "-"
    } else {
        ""
    }
}

/// `0`, `1`, `-j`, `1/√2`, `(1+j)/√2`, `j/√2`; anything else as `a+bj`.
pub fn rationalized(z: Complex<f64>) -> String {
    let over = |root2: bool| if root2 { "/√2" } else { "" };
    match (classify(z.re), classify(z.im)) {
        (Part::Zero, Part::Zero) => "0".into(),
        (Part::Unit { negative, root2 }, Part::Zero) => format!("{}1{}", sign(negative), over(root2)),
        (Part::Zero, Part::Unit { negative, root2 }) => format!("{}j{}", sign(negative), over(root2)),
        (Part::Unit { negative: nr, root2: a }, Part::Unit { negative: ni, root2: b }) if a == b => {
            let body = format!("{}1{}j", sign(nr), if ni { "-" } else { "+" });
            if a {
                format!("({body})/√2")
            } else {
                body
            }
        }
        _ => numeric(z),
    }
}

pub fn numeric(z: Complex<f64>) -> String {
    if z.im == 0.0 {
        return sig12(z.re);
    }
    format!("{}{}{}j", sig12(z.re), if z.im < 0.0 { "-" } else { "+" }, sig12(z.im.abs()))
}

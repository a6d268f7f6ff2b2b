//! CSV dialect shared by every artifact: comma separated, header row,
//! LF line endings, reals with 17 significant digits.

use std::io;

pub fn csv_writer<W: io::Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

/// Scientific notation with 17 significant digits, which round-trips every
/// finite `f64` exactly.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_real(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_real(-2.0), "-2.0000000000000000e0");
    }

    proptest! {
        #[test]
        fn reals_round_trip(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            prop_assert_eq!(fmt_real(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }
}

use std::fmt;

use serde::{Serialize, Serializer};

/// Rounds `100 · num / den` to two decimals, half to even, and returns it in
/// hundredths of a percent. Exact integer arithmetic: no float ever sees the
/// unrounded value.
pub fn round_half_even_hundredths(num: u64, den: u64) -> u64 {
    assert!(den > 0, "zero denominator");
    let scaled = u128::from(num) * 10_000;
    let den = u128::from(den);
    let (q, r) = (scaled / den, scaled % den);
    let up = match (2 * r).cmp(&den) {
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Equal => q % 2 == 1,
        std::cmp::Ordering::Less => false,
    };
    (q + u128::from(up)) as u64
}

/// `9321` → `"93.21"`.
pub fn format_hundredths(h: u64) -> String {
    format!("{}.{:02}", h / 100, h % 100)
}

/// An exact fraction reported as a two-decimal percentage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Self {
        Self { num, den }
    }

    /// Rounded percentage in hundredths; 0 for an empty denominator.
    pub fn hundredths(&self) -> u64 {
        if self.den == 0 {
            0
        } else {
            round_half_even_hundredths(self.num, self.den)
        }
    }

    pub fn percent(&self) -> f64 {
        self.hundredths() as f64 / 100.0
    }

    pub fn percent_str(&self) -> String {
        format_hundredths(self.hundredths())
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.percent_str())
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Ratio", 3)?;
        st.serialize_field("count", &self.num)?;
        st.serialize_field("total", &self.den)?;
        st.serialize_field("percent", &self.percent())?;
        st.end()
    }
}

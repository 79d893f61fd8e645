//! Shared JSON emission helpers.
//!
//! Reports and transform files are written by hand so that the output is
//! byte-stable: keys appear in a fixed order and every float is rendered
//! with 17 significant digits, enough for an exact `f64` round trip.

/// Formats a float with 17 significant digits (`d.dddddddddddddddde±x`).
pub(crate) fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

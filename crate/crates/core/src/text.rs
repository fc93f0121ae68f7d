//! Small helpers shared by the line-oriented text formats.

use alloc::string::String;
use core::fmt::Write;

/// Formats a value with at most `digits` decimals and no trailing zeros.
pub fn trimmed(v: f64, digits: usize) -> String {
    let mut s = String::new();
    let _ = write!(s, "{:.*}", digits, v);
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = String::from("0");
    }
    s
}

/// Drops a `#` comment and surrounding whitespace.
pub(crate) fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => line[..i].trim_end(),
        None => line.trim_end(),
    }
}

/// Splits `key: value` with both sides trimmed.
pub(crate) fn key_value(line: &str) -> Option<(&str, &str)> {
    let (k, v) = line.split_once(':')?;
    Some((k.trim(), v.trim()))
}

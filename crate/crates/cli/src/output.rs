//! JSON envelope and plain-text tables.

use std::io;

use serde::Serialize;
use serde_json::ser::Formatter;

pub const ENVELOPE_VERSION: &str = "1";

#[derive(Debug, Serialize)]
pub struct Envelope<I: Serialize, R: Serialize> {
    pub version: &'static str,
    pub tool_version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub inputs: I,
    pub result: R,
}

impl<I: Serialize, R: Serialize> Envelope<I, R> {
    pub fn new(command: &'static str, seed: u64, inputs: I, result: R) -> Self {
        Self {
            version: ENVELOPE_VERSION,
            tool_version: env!("CARGO_PKG_VERSION"),
            command,
            seed,
            inputs,
            result,
        }
    }
}

/// Compact JSON with every `f64` written to 17 significant digits, so values
/// round-trip exactly. Non-finite values never reach the formatter;
/// `serde_json` emits them as `null`.
#[derive(Debug, Default)]
struct SeventeenDigits;

impl Formatter for SeventeenDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
}

pub fn to_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SeventeenDigits);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

/// Two-column key/value table.
pub fn table(rows: &[(&str, String)]) -> String {
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (k, v) in rows {
        out.push_str(&format!("{k:<width$}  {v}\n"));
    }
    out
}

pub fn num(v: f64) -> String {
    if v != 0.0 && v.abs() < 1e-4 {
        format!("{v:.3e}")
    } else if v.is_finite() {
        format!("{v:.6}")
    } else {
        v.to_string()
    }
}

//! Plain-text parameter dumps.
//!
//! ```text
//! beamsim-lstm 1
//! input_size 1
//! hidden 20
//! actions 6
//! params 1926
//! <one parameter per line, shortest round-trip decimal>
//! ```
//!
//! Parameters follow the flat layout documented in [`super::lstm`]. Decimal
//! output uses Rust's shortest round-trip formatting, so a reload is bit-exact.

use std::io::{self, BufRead, Write};

use thiserror::Error;

use super::lstm::Lstm;

const MAGIC: &str = "beamsim-lstm 1";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

fn parse_err(line: usize, message: impl Into<String>) -> CheckpointError {
    CheckpointError::Parse { line, message: message.into() }
}

pub fn write_checkpoint<W: Write>(net: &Lstm, mut w: W) -> io::Result<()> {
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "input_size {}", net.input_size())?;
    writeln!(w, "hidden {}", net.hidden())?;
    writeln!(w, "actions {}", net.actions())?;
    writeln!(w, "params {}", net.params().len())?;
    for p in net.params() {
        writeln!(w, "{p}")?;
    }
    Ok(())
}

pub fn read_checkpoint<R: BufRead>(r: R) -> Result<Lstm, CheckpointError> {
    let mut lines = r.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next = |what: &str| -> Result<(usize, String), CheckpointError> {
        match lines.next() {
            Some((n, l)) => Ok((n, l?)),
            None => Err(parse_err(0, format!("unexpected end of file, expected {what}"))),
        }
    };

    let (n, magic) = next("header")?;
    if magic.trim() != MAGIC {
        return Err(parse_err(n, format!("expected `{MAGIC}`")));
    }
    let mut header = |key: &str| -> Result<usize, CheckpointError> {
        let (n, l) = next(key)?;
        let mut parts = l.split_whitespace();
        match (parts.next(), parts.next().map(str::parse::<usize>)) {
            (Some(k), Some(Ok(v))) if k == key => Ok(v),
            _ => Err(parse_err(n, format!("expected `{key} <count>`"))),
        }
    };
    let input_size = header("input_size")?;
    let hidden = header("hidden")?;
    let actions = header("actions")?;
    let count = header("params")?;
    if count != Lstm::param_count(input_size, hidden, actions) {
        return Err(parse_err(5, "parameter count does not match shape"));
    }

    let mut params = Vec::with_capacity(count);
    for _ in 0..count {
        let (n, l) = next("parameter")?;
        let v: f64 = l.trim().parse().map_err(|e| parse_err(n, format!("{e}")))?;
        params.push(v);
    }
    Ok(Lstm::from_params(input_size, hidden, actions, params).expect("count checked"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::lstm::Carry;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reload_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let net = Lstm::random(1, 20, 6, 0.1, &mut rng);
        let mut buf = Vec::new();
        write_checkpoint(&net, &mut buf).unwrap();
        let back = read_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(back, net);
        let a = net.forward(&Carry::zeros(20), &[0.2, 0.4]);
        let b = back.forward(&Carry::zeros(20), &[0.2, 0.4]);
        assert_eq!(a.q, b.q);
    }

    #[test]
    fn bad_inputs_report_lines() {
        let err = read_checkpoint("nope\n".as_bytes()).unwrap_err();
        assert!(matches!(err, CheckpointError::Parse { line: 1, .. }));
        let text = "beamsim-lstm 1\ninput_size 1\nhidden 1\nactions 1\nparams 3\n";
        assert!(matches!(read_checkpoint(text.as_bytes()), Err(CheckpointError::Parse { line: 5, .. })));
        let net = Lstm::zeros(1, 1, 1);
        let mut buf = Vec::new();
        write_checkpoint(&net, &mut buf).unwrap();
        let mut text = String::from_utf8(buf).unwrap();
        text = text.replacen("\n0\n", "\nzero\n", 1);
        assert!(matches!(read_checkpoint(text.as_bytes()), Err(CheckpointError::Parse { line: 6, .. })));
    }
}

//! Plain-text tensor format: a header line `m n` followed by the `n^m`
//! entries in lexicographic order, whitespace separated. Values are written
//! with the shortest decimal that parses back to the same bits.

use std::fmt::Write as _;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::DenseTensor;

pub fn write_tensor<T: Scalar, W: Write>(t: &DenseTensor<T>, mut w: W) -> Result<()> {
    writeln!(w, "{} {}", t.order(), t.dim())?;
    let mut line = String::new();
    for row in t.as_slice().chunks(t.dim()) {
        line.clear();
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                line.push(' ');
            }
            write!(line, "{v}").expect("writing to a String cannot fail");
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn read_tensor<T: Scalar, R: Read>(mut r: R) -> Result<DenseTensor<T>> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let mut tokens = text.split_whitespace();
    let mut header = |name: &str| -> Result<usize> {
        tokens
            .next()
            .ok_or_else(|| Error::Parse(format!("missing {name} in header")))?
            .parse()
            .map_err(|_| Error::Parse(format!("bad {name} in header")))
    };
    let order = header("order")?;
    let dim = header("dimension")?;
    let data = tokens
        .map(|tok| tok.parse::<T>().map_err(|_| Error::Parse(format!("bad entry `{tok}`"))))
        .collect::<Result<Vec<T>>>()?;
    DenseTensor::new(order, dim, data)
}

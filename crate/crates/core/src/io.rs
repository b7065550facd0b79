//! Long-format CSV output shared by the export functions of every module.
//! Complex values are always written as two real columns.

use std::io::Write;

use crate::error::Result;
use crate::scalar::{Real, C};

/// Shortest round-trip decimal representation.
pub fn fmt_real<T: Real>(x: T) -> String {
    format!("{}", x.to_f64_lossy())
}

pub(crate) fn push_complex<T: Real>(row: &mut Vec<String>, z: C<T>) {
    row.push(fmt_real(z.re));
    row.push(fmt_real(z.im));
}

/// Writes `header` followed by `rows` as CSV.
pub fn write_rows<W: Write, I>(out: W, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

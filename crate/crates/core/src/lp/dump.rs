use std::io::{self, Write};

use super::{LinearModel, Sense};

/// Writes `model` in a plain row-oriented text format:
///
/// ```text
/// min: 1 x0 -2 x1
/// c0: 1 x0 +1 x1 <= 4
/// bounds x0: 0 inf
/// binary x1
/// ```
pub fn write_lp_dump<W: Write>(model: &LinearModel, mut out: W) -> io::Result<()> {
    let sense = match model.sense {
        Sense::Minimize => "min",
        Sense::Maximize => "max",
    };
    write!(out, "{sense}:")?;
    for (v, c) in model.vars().iter().zip(model.objective()) {
        if *c != 0.0 {
            write!(out, " {:+} {}", c, v.name)?;
        }
    }
    if model.objective_offset != 0.0 {
        write!(out, " {:+}", model.objective_offset)?;
    }
    writeln!(out)?;
    for row in model.rows() {
        write!(out, "{}:", row.name)?;
        for &(v, c) in &row.coeffs {
            write!(out, " {:+} {}", c, model.vars()[v.0].name)?;
        }
        writeln!(out, " {} {}", row.relation, row.rhs)?;
    }
    for v in model.vars() {
        if v.binary {
            writeln!(out, "binary {}", v.name)?;
        } else {
            writeln!(out, "bounds {}: {} {}", v.name, v.lower, v.upper)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::Relation;

    #[test]
    fn one_line_per_row() {
        let mut m = LinearModel::new(Sense::Minimize);
        let x = m.add_var("x", 0.0, f64::INFINITY);
        let z = m.add_binary("z");
        m.set_objective(x, 2.0);
        m.add_row("cap", [(x, 1.0), (z, -3.0)], Relation::Le, 4.0);
        let mut buf = Vec::new();
        write_lp_dump(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "min: +2 x");
        assert_eq!(lines[1], "cap: +1 x -3 z <= 4");
        assert_eq!(lines[2], "bounds x: 0 inf");
        assert_eq!(lines[3], "binary z");
    }
}

//! Tabulated curves for plotting: family payoffs and conditional densities.

use serde::Serialize;

use crate::equilibrium::{AuctionInstance, BidCurve};
use crate::error::{check_in, Error, Result};
use crate::grid::Grid;
use crate::information::InformationModel;
use crate::securities::SecurityFamily;

/// Column-oriented table with a shared first column.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format!("{v}")))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Each family's payoff at the midpoint of its bid interval, over `x_grid`.
pub fn family_payoffs(families: &[SecurityFamily], x_grid: &Grid) -> Result<Table> {
    let mut columns = vec!["x".to_string()];
    let mut bids = Vec::new();
    for fam in families {
        let (lo, hi) = fam.bid_interval();
        let (xlo, xhi) = fam.value_support();
        x_grid.check_within("value grid", xlo, xhi)?;
        columns.push(fam.name().to_string());
        bids.push(0.5 * (lo + hi));
    }
    let rows = x_grid
        .iter()
        .map(|&x| {
            std::iter::once(x)
                .chain(families.iter().zip(&bids).map(|(f, &b)| f.payoff_unchecked(x, b)))
                .collect()
        })
        .collect();
    Ok(Table { columns, rows })
}

/// Equilibrium payments `payoff(x, β(z1))` of each solved family.
pub fn equilibrium_payoffs(solved: &[(AuctionInstance, BidCurve)], z1: f64, x_grid: &Grid) -> Result<Table> {
    let mut columns = vec!["x".to_string()];
    let mut bids = Vec::new();
    for (inst, curve) in solved {
        let (lo, hi) = inst.model.signal_support();
        check_in("signal z1", z1, lo, hi)?;
        columns.push(inst.family.name().to_string());
        bids.push(curve.bid_at(z1));
    }
    let rows = x_grid
        .iter()
        .map(|&x| {
            std::iter::once(x)
                .chain(
                    solved
                        .iter()
                        .zip(&bids)
                        .map(|((i, _), &b)| i.family.payoff_unchecked(x, b)),
                )
                .collect()
        })
        .collect();
    Ok(Table { columns, rows })
}

/// Conditional value densities at `(z1, z1)` and `(y1, z1)`.
pub fn density_slices(model: &dyn InformationModel, y1: f64, z1: f64, x_grid: &Grid) -> Result<Table> {
    let (lo, hi) = model.signal_support();
    check_in("signal y1", y1, lo, hi)?;
    check_in("signal z1", z1, lo, hi)?;
    if y1 < z1 {
        return Err(Error::Input(format!("need y1 >= z1, got y1={y1}, z1={z1}")));
    }
    let (xlo, xhi) = model.value_support();
    x_grid.check_within("value grid", xlo, xhi)?;
    let rows = x_grid
        .iter()
        .map(|&x| vec![x, model.value_pdf(x, z1, z1), model.value_pdf(x, y1, z1)])
        .collect();
    Ok(Table {
        columns: vec!["x".into(), "pdf_z1_z1".into(), "pdf_y1_z1".into()],
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::information::Example1;

    #[test]
    fn family_table_shape() {
        let t = family_payoffs(&SecurityFamily::standard_set(1.0), &Grid::uniform(0.0, 1.0, 5)).unwrap();
        assert_eq!(t.columns, ["x", "cash", "debt", "equity", "call_option"]);
        assert_eq!(t.rows[4], vec![1.0, 0.5, 0.5, 0.5, 0.5]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("x,cash,debt,equity,call_option\n0,0.5,0,0,0\n"));
    }

    #[test]
    fn density_slices_example1() {
        let t = density_slices(&Example1, 1.0, 0.0, &Grid::new(vec![0.0, 0.25, 0.5]).unwrap()).unwrap();
        assert_eq!(t.rows[1], vec![0.25, 1.0, 1.0 - 1.0 + 6.0 * 0.25]);
        assert!(density_slices(&Example1, 0.1, 0.5, &Grid::uniform(0.0, 1.0, 3)).is_err());
    }
}

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{evaluate, MetricError, MetricReport, Protocol};
use crate::killmatrix::{union_matrices, KillMatrix};

/// Metrics of the suite formed by appending `b`'s tests to `a`'s.
pub fn mix_report(a: &KillMatrix, b: &KillMatrix, protocol: &Protocol) -> Result<MetricReport, MetricError> {
    evaluate(&union_matrices(a, b)?, protocol)
}

/// A named test source with one kill matrix per problem.
#[derive(Debug, Clone)]
pub struct MixSource {
    pub name: String,
    pub matrices: BTreeMap<String, KillMatrix>,
}

/// Pairwise AUC@N of mixed suites, averaged over the problems both
/// sources cover. Diagonal cells hold the single source's own value.
#[derive(Debug, Clone, PartialEq)]
pub struct MixGrid {
    pub names: Vec<String>,
    pub cells: Vec<Vec<Option<f64>>>,
}

impl MixGrid {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("source");
        for n in &self.names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for (name, row) in self.names.iter().zip(&self.cells) {
            out.push_str(name);
            for cell in row {
                out.push(',');
                if let Some(v) = cell {
                    let _ = write!(out, "{v}");
                }
            }
            out.push('\n');
        }
        out
    }
}

pub fn mix_grid(sources: &[MixSource], protocol: &Protocol) -> Result<MixGrid, MetricError> {
    let mut cells = vec![vec![None; sources.len()]; sources.len()];
    for i in 0..sources.len() {
        for j in i..sources.len() {
            let (a, b) = (&sources[i], &sources[j]);
            let mut values = Vec::new();
            for (pid, ma) in &a.matrices {
                let Some(mb) = b.matrices.get(pid) else { continue };
                let report = if i == j {
                    evaluate(ma, protocol)?
                } else {
                    mix_report(ma, mb, protocol)?
                };
                values.extend(report.auc_at_n);
            }
            let cell = (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64);
            cells[i][j] = cell;
            cells[j][i] = cell;
        }
    }
    Ok(MixGrid {
        names: sources.iter().map(|s| s.name.clone()).collect(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn protocol(ks: &[usize], n_max: usize) -> Protocol {
        Protocol {
            k_list: ks.to_vec(),
            k_min: 1,
            n_max,
            seed: 3,
            mc_trials: 2000,
            include_ce: false,
        }
    }

    #[test]
    fn disjoint_sources_complement() {
        let a = KillMatrix::from_bit_strings("p", &["10", "10"]);
        let b = KillMatrix::from_bit_strings("p", &["01", "01"]);
        let p = protocol(&[1, 2], 2);
        assert_eq!(evaluate(&a, &p).unwrap().vacc_full, Some(0.0));
        assert_eq!(evaluate(&b, &p).unwrap().vacc_full, Some(0.0));
        assert_eq!(mix_report(&a, &b, &p).unwrap().vacc_full, Some(1.0));
    }

    #[test]
    fn self_mix_doubles_rows() {
        let x = KillMatrix::from_bit_strings("p", &["10", "01", "00"]);
        let p = protocol(&[1], 2);
        let single = evaluate(&x, &p).unwrap();
        let doubled = mix_report(&x, &x, &p).unwrap();
        assert_eq!(doubled.dr_full, single.dr_full);
        assert_eq!(doubled.depc, single.depc);
        assert_eq!(doubled.diversity_ratio, single.diversity_ratio / 2.0);
    }

    #[test]
    fn empty_suite_is_identity() {
        let x = KillMatrix::from_bit_strings("p", &["10", "01", "11"]);
        let empty = KillMatrix::zeros("p", x.solution_ids.clone(), 0);
        let p = protocol(&[1, 2, 3], 3);
        assert_eq!(mix_report(&x, &empty, &p).unwrap(), evaluate(&x, &p).unwrap());
    }

    #[test]
    fn grid_diagonal_is_single_source() {
        let src = |name: &str, rows: &[&str]| MixSource {
            name: name.into(),
            matrices: [("p".to_string(), KillMatrix::from_bit_strings("p", rows))].into(),
        };
        let sources = [src("a", &["10", "10"]), src("b", &["01", "01"])];
        let p = protocol(&[1, 2, 4], 2);
        let grid = mix_grid(&sources, &p).unwrap();
        assert_eq!(grid.cells[0][0], Some(0.0));
        assert_eq!(grid.cells[1][1], Some(0.0));
        let off = grid.cells[0][1].unwrap();
        assert!(off > 0.0);
        assert_eq!(grid.cells[1][0], Some(off));
        assert!(grid.to_csv().starts_with("source,a,b\na,0,"));
    }
}

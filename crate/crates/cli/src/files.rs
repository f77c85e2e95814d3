//! JSON instance/solution schemas and CSV output.
//!
//! Instance files (`"format": 1`):
//!
//! ```json
//! {
//!   "format": 1,
//!   "delta": 0.1,
//!   "c0": [..],
//!   "QN": [[..]], "qN": [..],
//!   "stages": [ { "Q": [[..]], "M": [[..]], "R": [[..]],
//!                 "q": [..], "r": [..],
//!                 "A": [[..]], "B": [[..]], "c_next": [..] } ]
//! }
//! ```
//!
//! Solution files carry the trajectory, the multipliers, the relative KKT
//! residual, and whether the dense oracle check ran. Numbers round-trip
//! losslessly (shortest-representation float formatting).

use serde::{Deserialize, Serialize};
use trajopt::dense::{Matrix, Vector};
use trajopt::reglqr::{LqrStage, RegLqrProblem, RegLqrSolution};

pub const SCHEMA_FORMAT: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
pub struct LqInstanceFile {
    pub format: u32,
    pub delta: f64,
    pub c0: Vec<f64>,
    #[serde(rename = "QN")]
    pub q_terminal: Vec<Vec<f64>>,
    #[serde(rename = "qN")]
    pub q_terminal_lin: Vec<f64>,
    pub stages: Vec<LqStageFile>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LqStageFile {
    #[serde(rename = "Q")]
    pub q_cost: Vec<Vec<f64>>,
    #[serde(rename = "M")]
    pub cross_cost: Vec<Vec<f64>>,
    #[serde(rename = "R")]
    pub r_cost: Vec<Vec<f64>>,
    pub q: Vec<f64>,
    pub r: Vec<f64>,
    #[serde(rename = "A")]
    pub a_dyn: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b_dyn: Vec<Vec<f64>>,
    pub c_next: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SolutionFile {
    pub format: u32,
    pub x: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    pub kkt_residual: f64,
    pub oracle_checked: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_max_rel_error: Option<f64>,
}

fn matrix_from_rows(rows: &[Vec<f64>], r: usize, c: usize, what: String) -> Result<Matrix, String> {
    if rows.len() != r || rows.iter().any(|row| row.len() != c) {
        return Err(format!("{what}: expected a {r}x{c} matrix"));
    }
    Ok(Matrix::from_fn(r, c, |i, j| rows[i][j]))
}

impl LqInstanceFile {
    /// Validates dimensions (naming the offending stage) and converts into a
    /// solver problem.
    pub fn to_problem(&self) -> Result<RegLqrProblem, String> {
        if self.format != SCHEMA_FORMAT {
            return Err(format!(
                "unsupported format {} (expected {SCHEMA_FORMAT})",
                self.format
            ));
        }
        if !self.delta.is_finite() || self.delta < 0.0 {
            return Err(format!("delta must be finite and >= 0, got {}", self.delta));
        }
        let nx = self.c0.len();
        if nx == 0 {
            return Err("c0 must be non-empty".into());
        }
        let q_n = matrix_from_rows(&self.q_terminal, nx, nx, "QN".into())?;
        if self.q_terminal_lin.len() != nx {
            return Err(format!("qN: expected length {nx}"));
        }
        let nu = self.stages.first().map(|s| s.r.len()).unwrap_or(0);
        let mut stages = Vec::with_capacity(self.stages.len());
        for (i, st) in self.stages.iter().enumerate() {
            let ctx = |name: &str| format!("stage {i}: {name}");
            if st.q.len() != nx || st.r.len() != nu {
                return Err(format!("stage {i}: q/r lengths inconsistent"));
            }
            if st.c_next.len() != nx {
                return Err(format!("stage {i}: c_next expected length {nx}"));
            }
            stages.push(LqrStage {
                Q: matrix_from_rows(&st.q_cost, nx, nx, ctx("Q"))?,
                M: matrix_from_rows(&st.cross_cost, nx, nu, ctx("M"))?,
                R: matrix_from_rows(&st.r_cost, nu, nu, ctx("R"))?,
                q: Vector::from_vec(st.q.clone()),
                r: Vector::from_vec(st.r.clone()),
                A: matrix_from_rows(&st.a_dyn, nx, nx, ctx("A"))?,
                B: matrix_from_rows(&st.b_dyn, nx, nu, ctx("B"))?,
                c_next: Vector::from_vec(st.c_next.clone()),
            });
        }
        Ok(RegLqrProblem {
            stages,
            Q_N: q_n,
            q_N: Vector::from_vec(self.q_terminal_lin.clone()),
            c0: Vector::from_vec(self.c0.clone()),
            delta: self.delta,
        })
    }
}

fn matrix_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| m[(i, j)]).collect())
        .collect()
}

impl From<&RegLqrProblem> for LqInstanceFile {
    fn from(p: &RegLqrProblem) -> Self {
        LqInstanceFile {
            format: SCHEMA_FORMAT,
            delta: p.delta,
            c0: p.c0.as_slice().to_vec(),
            q_terminal: matrix_rows(&p.Q_N),
            q_terminal_lin: p.q_N.as_slice().to_vec(),
            stages: p
                .stages
                .iter()
                .map(|st| LqStageFile {
                    q_cost: matrix_rows(&st.Q),
                    cross_cost: matrix_rows(&st.M),
                    r_cost: matrix_rows(&st.R),
                    q: st.q.as_slice().to_vec(),
                    r: st.r.as_slice().to_vec(),
                    a_dyn: matrix_rows(&st.A),
                    b_dyn: matrix_rows(&st.B),
                    c_next: st.c_next.as_slice().to_vec(),
                })
                .collect(),
        }
    }
}

pub fn solution_file(
    sol: &RegLqrSolution,
    kkt_residual: f64,
    oracle_max_rel_error: Option<f64>,
) -> SolutionFile {
    SolutionFile {
        format: SCHEMA_FORMAT,
        x: sol.x.iter().map(|v| v.as_slice().to_vec()).collect(),
        u: sol.u.iter().map(|v| v.as_slice().to_vec()).collect(),
        y: sol.y.iter().map(|v| v.as_slice().to_vec()).collect(),
        kkt_residual,
        oracle_checked: oracle_max_rel_error.is_some(),
        oracle_max_rel_error,
    }
}

/// CSV with one row per stage: `stage, x[...], u[...], y[...]`; control
/// cells are empty on the terminal row.
pub fn trajectory_csv(xs: &[Vector], us: &[Vector], ys: &[Vector]) -> String {
    let nx = xs.first().map_or(0, |v| v.len());
    let nu = us.first().map_or(0, |v| v.len());
    let ny = ys.first().map_or(0, |v| v.len());
    let mut out = String::from("stage");
    for j in 0..nx {
        out.push_str(&format!(",x{j}"));
    }
    for j in 0..nu {
        out.push_str(&format!(",u{j}"));
    }
    for j in 0..ny {
        out.push_str(&format!(",y{j}"));
    }
    out.push('\n');
    for (i, x) in xs.iter().enumerate() {
        out.push_str(&i.to_string());
        for j in 0..nx {
            out.push_str(&format!(",{}", x[j]));
        }
        for j in 0..nu {
            if i < us.len() {
                out.push_str(&format!(",{}", us[i][j]));
            } else {
                out.push(',');
            }
        }
        for j in 0..ny {
            if i < ys.len() {
                out.push_str(&format!(",{}", ys[i][j]));
            } else {
                out.push(',');
            }
        }
        out.push('\n');
    }
    out
}

/// Byte offset of a 1-based (line, column) position in `src`.
pub fn byte_offset(src: &str, line: usize, column: usize) -> usize {
    let mut offset = 0;
    for (idx, l) in src.split_inclusive('\n').enumerate() {
        if idx + 1 == line {
            return offset + column.saturating_sub(1);
        }
        offset += l.len();
    }
    offset
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instance_roundtrip() {
        let json = r#"{
            "format": 1,
            "delta": 1.0,
            "c0": [3.0],
            "QN": [[2.0]],
            "qN": [1.0],
            "stages": []
        }"#;
        let file: LqInstanceFile = serde_json::from_str(json).unwrap();
        let p = file.to_problem().unwrap();
        assert_eq!(p.delta, 1.0);
        assert_eq!(p.Q_N[(0, 0)], 2.0);
        let back = LqInstanceFile::from(&p);
        let p2 = back.to_problem().unwrap();
        assert_eq!(p2.c0.as_slice(), p.c0.as_slice());
    }

    #[test]
    fn dimension_error_names_the_stage() {
        let json = r#"{
            "format": 1,
            "delta": 0.0,
            "c0": [0.0, 0.0],
            "QN": [[1.0, 0.0], [0.0, 1.0]],
            "qN": [0.0, 0.0],
            "stages": [{
                "Q": [[1.0, 0.0], [0.0, 1.0]],
                "M": [[0.0], [0.0]],
                "R": [[1.0]],
                "q": [0.0, 0.0],
                "r": [0.0],
                "A": [[1.0, 0.0]],
                "B": [[0.0], [0.1]],
                "c_next": [0.0, 0.0]
            }]
        }"#;
        let file: LqInstanceFile = serde_json::from_str(json).unwrap();
        let err = file.to_problem().unwrap_err();
        assert!(err.contains("stage 0"), "error was: {err}");
    }

    #[test]
    fn byte_offset_walks_lines() {
        let src = "ab\ncd\nef";
        assert_eq!(byte_offset(src, 1, 1), 0);
        assert_eq!(byte_offset(src, 2, 1), 3);
        assert_eq!(byte_offset(src, 3, 2), 7);
    }

    #[test]
    fn csv_leaves_terminal_controls_blank() {
        let xs = vec![Vector::from_vec(vec![1.0]), Vector::from_vec(vec![2.0])];
        let us = vec![Vector::from_vec(vec![0.5])];
        let ys = vec![Vector::from_vec(vec![-1.0]), Vector::from_vec(vec![-2.0])];
        let csv = trajectory_csv(&xs, &us, &ys);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "stage,x0,u0,y0");
        assert_eq!(lines[1], "0,1,0.5,-1");
        assert_eq!(lines[2], "1,2,,-2");
    }
}

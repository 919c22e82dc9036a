//! Plain-text formats for problems and offline solutions.
//!
//! Both formats are tab-separated, one record per line, with a version
//! header. Floats in problem files use Rust's shortest round-trip formatting
//! so reading a written file gives back the exact same values; solution
//! files use 17 significant digits.
//!
//! ```text
//! osbm-instance v1
//! horizon	200
//! eta	1
//! offline	u0	1
//! online	v0	0.25
//! edge	e0	u0	v0
//! objective	budget-additive
//! budget	50.0
//! weight	e0	0.75
//! ```
//!
//! Coverage objectives use `features <g>`, `feature_weight <z> <w>` and
//! `edge_features <edge> <z,z,...>`; per-user coverage uses `genres <g>`,
//! `user_weights <v> <w,w,...>` and `edge_features` for the edge's genres.

#![allow(clippy::tabs_in_doc_comments)]

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::BufRead;

use crate::instance::{Edge, Instance, OfflineVertex, OnlineType, Problem};
use crate::offline::{Diagnostics, OfflineSolution, SolverKind};
use crate::submodular::{Objective, ObjectiveKind, PerUserCoverage};
use crate::{Error, Result};

pub const INSTANCE_HEADER: &str = "osbm-instance v1";
pub const SOLUTION_HEADER: &str = "osbm-solution v1";

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn join_f64(items: &[f64]) -> String {
    items.iter().map(|w| format!("{w:?}")).collect::<Vec<_>>().join(",")
}

pub fn write_problem(problem: &Problem) -> String {
    let Problem { instance, objective } = problem;
    let mut s = String::new();
    let _ = writeln!(s, "{INSTANCE_HEADER}");
    let _ = writeln!(s, "horizon\t{}", instance.horizon());
    let _ = writeln!(s, "eta\t{}", instance.eta());
    for u in instance.offline() {
        let _ = writeln!(s, "offline\t{}\t{}", u.id, u.capacity);
    }
    for v in instance.online() {
        let _ = writeln!(s, "online\t{}\t{:?}", v.id, v.rate);
    }
    for e in instance.edges() {
        let _ = writeln!(
            s,
            "edge\t{}\t{}\t{}",
            e.id,
            instance.offline()[e.u].id,
            instance.online()[e.v].id
        );
    }
    let _ = writeln!(s, "objective\t{}", objective.kind());
    let edge_id = |e: usize| &instance.edge(e).id;
    match objective {
        Objective::Linear { weights } | Objective::BudgetAdditive { weights, .. } => {
            if let Objective::BudgetAdditive { budget, .. } = objective {
                let _ = writeln!(s, "budget\t{budget:?}");
            }
            for (e, w) in weights.iter().enumerate() {
                let _ = writeln!(s, "weight\t{}\t{w:?}", edge_id(e));
            }
        }
        Objective::Coverage(c) => {
            let _ = writeln!(s, "features\t{}", c.feature_weights().len());
            for (z, w) in c.feature_weights().iter().enumerate() {
                let _ = writeln!(s, "feature_weight\t{z}\t{w:?}");
            }
            for (e, q) in c.edge_features().iter().enumerate() {
                let _ = writeln!(s, "edge_features\t{}\t{}", edge_id(e), join(q));
            }
        }
        Objective::PerUserCoverage(p) => {
            let genres = p.user_weights().first().map_or(0, Vec::len);
            let _ = writeln!(s, "genres\t{genres}");
            for (v, w) in p.user_weights().iter().enumerate() {
                let _ = writeln!(s, "user_weights\t{}\t{}", instance.online()[v].id, join_f64(w));
            }
            for (e, q) in p.edge_genres().iter().enumerate() {
                let _ = writeln!(s, "edge_features\t{}\t{}", edge_id(e), join(q));
            }
        }
    }
    s
}

struct Line<'a> {
    no: usize,
    fields: Vec<&'a str>,
}

impl Line<'_> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            line: self.no,
            msg: msg.into(),
        }
    }

    fn expect(&self, n: usize) -> Result<()> {
        if self.fields.len() == n {
            Ok(())
        } else {
            Err(self.err(format!(
                "`{}` takes {} fields, found {}",
                self.fields[0],
                n - 1,
                self.fields.len() - 1
            )))
        }
    }

    fn num<T: std::str::FromStr>(&self, i: usize) -> Result<T> {
        self.fields[i]
            .parse()
            .map_err(|_| self.err(format!("cannot parse {:?}", self.fields[i])))
    }

    fn list<T: std::str::FromStr>(&self, i: usize) -> Result<Vec<T>> {
        if self.fields[i].is_empty() {
            return Ok(Vec::new());
        }
        self.fields[i]
            .split(',')
            .map(|t| {
                t.parse()
                    .map_err(|_| self.err(format!("cannot parse list entry {t:?}")))
            })
            .collect()
    }
}

fn lookup(map: &HashMap<String, usize>, line: &Line<'_>, i: usize, what: &str) -> Result<usize> {
    map.get(line.fields[i])
        .copied()
        .ok_or_else(|| line.err(format!("unknown {what} {:?}", line.fields[i])))
}

fn read_lines<R: BufRead>(reader: R, header: &str) -> Result<Vec<(usize, String)>> {
    let mut lines = Vec::new();
    let mut saw_header = false;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if !saw_header {
            if trimmed != header {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("expected header {header:?}"),
                });
            }
            saw_header = true;
            continue;
        }
        lines.push((i + 1, trimmed.to_string()));
    }
    if !saw_header {
        return Err(Error::Parse {
            line: 0,
            msg: format!("missing header {header:?}"),
        });
    }
    Ok(lines)
}

pub fn read_problem<R: BufRead>(reader: R) -> Result<Problem> {
    let lines = read_lines(reader, INSTANCE_HEADER)?;
    let mut horizon = None;
    let mut eta = 1;
    let mut offline = Vec::new();
    let mut online = Vec::new();
    let mut edges = Vec::new();
    let mut u_index = HashMap::new();
    let mut v_index = HashMap::new();
    let mut e_index = HashMap::new();
    let mut kind = None;
    let mut budget = None;
    let mut weights: Vec<Option<f64>> = Vec::new();
    let mut feature_weights: Vec<Option<f64>> = Vec::new();
    let mut edge_features: Vec<Option<Vec<u32>>> = Vec::new();
    let mut user_weights: Vec<Option<Vec<f64>>> = Vec::new();

    for (no, text) in &lines {
        let line = Line {
            no: *no,
            fields: text.split('\t').collect(),
        };
        match line.fields[0] {
            "horizon" => {
                line.expect(2)?;
                horizon = Some(line.num(1)?);
            }
            "eta" => {
                line.expect(2)?;
                eta = line.num(1)?;
            }
            "offline" => {
                line.expect(3)?;
                u_index.insert(line.fields[1].to_string(), offline.len());
                offline.push(OfflineVertex {
                    id: line.fields[1].to_string(),
                    capacity: line.num(2)?,
                });
            }
            "online" => {
                line.expect(3)?;
                v_index.insert(line.fields[1].to_string(), online.len());
                online.push(OnlineType {
                    id: line.fields[1].to_string(),
                    rate: line.num(2)?,
                });
                user_weights.push(None);
            }
            "edge" => {
                line.expect(4)?;
                let u = lookup(&u_index, &line, 2, "offline vertex")?;
                let v = lookup(&v_index, &line, 3, "online type")?;
                e_index.insert(line.fields[1].to_string(), edges.len());
                edges.push(Edge {
                    id: line.fields[1].to_string(),
                    u,
                    v,
                });
                weights.push(None);
                edge_features.push(None);
            }
            "objective" => {
                line.expect(2)?;
                kind = Some(
                    line.fields[1]
                        .parse::<ObjectiveKind>()
                        .map_err(|e| line.err(e.to_string()))?,
                );
            }
            "budget" => {
                line.expect(2)?;
                budget = Some(line.num::<f64>(1)?);
            }
            "weight" => {
                line.expect(3)?;
                let e = lookup(&e_index, &line, 1, "edge")?;
                weights[e] = Some(line.num(2)?);
            }
            "features" | "genres" => {
                line.expect(2)?;
                feature_weights = vec![None; line.num(1)?];
            }
            "feature_weight" => {
                line.expect(3)?;
                let z: usize = line.num(1)?;
                let slot = feature_weights
                    .get_mut(z)
                    .ok_or_else(|| line.err(format!("feature {z} outside the declared range")))?;
                *slot = Some(line.num(2)?);
            }
            "edge_features" => {
                line.expect(3)?;
                let e = lookup(&e_index, &line, 1, "edge")?;
                edge_features[e] = Some(line.list(2)?);
            }
            "user_weights" => {
                line.expect(3)?;
                let v = lookup(&v_index, &line, 1, "online type")?;
                user_weights[v] = Some(line.list(2)?);
            }
            other => return Err(line.err(format!("unknown record {other:?}"))),
        }
    }

    let missing = |what: &str| Error::Parse {
        line: 0,
        msg: format!("missing {what}"),
    };
    let horizon = horizon.ok_or_else(|| missing("horizon"))?;
    let kind = kind.ok_or_else(|| missing("objective"))?;
    let instance = Instance::new(offline, online, edges, horizon, eta);
    let edge_name = |e: usize| instance.edge(e).id.clone();
    let collect_weights = || -> Result<Vec<f64>> {
        weights
            .iter()
            .enumerate()
            .map(|(e, w)| w.ok_or_else(|| missing(&format!("weight for edge {}", edge_name(e)))))
            .collect()
    };
    let collect_features = || -> Result<Vec<Vec<u32>>> {
        edge_features
            .iter()
            .enumerate()
            .map(|(e, q)| {
                q.clone()
                    .ok_or_else(|| missing(&format!("features for edge {}", edge_name(e))))
            })
            .collect()
    };
    let objective = match kind {
        ObjectiveKind::Linear => Objective::linear(collect_weights()?)?,
        ObjectiveKind::BudgetAdditive => {
            Objective::budget_additive(collect_weights()?, budget.ok_or_else(|| missing("budget"))?)?
        }
        ObjectiveKind::Coverage => {
            let fw = feature_weights
                .iter()
                .enumerate()
                .map(|(z, w)| w.ok_or_else(|| missing(&format!("weight for feature {z}"))))
                .collect::<Result<Vec<f64>>>()?;
            Objective::coverage(collect_features()?, fw)?
        }
        ObjectiveKind::PerUserCoverage => {
            let uw = user_weights
                .iter()
                .enumerate()
                .map(|(v, w)| {
                    w.clone()
                        .ok_or_else(|| missing(&format!("user weights for {}", instance.online()[v].id)))
                })
                .collect::<Result<Vec<Vec<f64>>>>()?;
            let edge_user = instance.edges().iter().map(|e| e.v).collect();
            Objective::PerUserCoverage(PerUserCoverage::new(collect_features()?, edge_user, uw)?)
        }
    };
    objective.check_compatible(&instance)?;
    Ok(Problem { instance, objective })
}

/// Serialises an offline solution keyed by edge id.
pub fn write_solution(instance: &Instance, sol: &OfflineSolution) -> String {
    let d = &sol.diagnostics;
    let mut s = String::new();
    let _ = writeln!(s, "{SOLUTION_HEADER}");
    let _ = writeln!(s, "solver\t{}", d.solver);
    let _ = writeln!(s, "steps\t{}", d.steps);
    let _ = writeln!(s, "grad_samples\t{}", d.grad_samples);
    let _ = writeln!(s, "seed\t{}", d.seed);
    let _ = writeln!(s, "value\t{:.16e}", sol.value);
    for (e, x) in sol.x.iter().enumerate() {
        let _ = writeln!(s, "x\t{}\t{x:.16e}", instance.edge(e).id);
    }
    s
}

/// Reads a solution written by [`write_solution`]; every edge of `instance`
/// must appear exactly once.
pub fn read_solution<R: BufRead>(reader: R, instance: &Instance) -> Result<OfflineSolution> {
    let lines = read_lines(reader, SOLUTION_HEADER)?;
    let e_index: HashMap<String, usize> = instance
        .edges()
        .iter()
        .enumerate()
        .map(|(i, e)| (e.id.clone(), i))
        .collect();
    let mut x = vec![None; instance.num_edges()];
    let mut diagnostics = Diagnostics::default();
    let mut value = f64::NAN;
    for (no, text) in &lines {
        let line = Line {
            no: *no,
            fields: text.split('\t').collect(),
        };
        match line.fields[0] {
            "solver" => {
                line.expect(2)?;
                diagnostics.solver = line.fields[1]
                    .parse::<SolverKind>()
                    .map_err(|e| line.err(e.to_string()))?;
            }
            "steps" => {
                line.expect(2)?;
                diagnostics.steps = line.num(1)?;
            }
            "grad_samples" => {
                line.expect(2)?;
                diagnostics.grad_samples = line.num(1)?;
            }
            "seed" => {
                line.expect(2)?;
                diagnostics.seed = line.num(1)?;
            }
            "value" => {
                line.expect(2)?;
                value = line.num(1)?;
            }
            "x" => {
                line.expect(3)?;
                let e = lookup(&e_index, &line, 1, "edge")?;
                if x[e].is_some() {
                    return Err(line.err(format!("edge {:?} listed twice", line.fields[1])));
                }
                x[e] = Some(line.num(2)?);
            }
            other => return Err(line.err(format!("unknown record {other:?}"))),
        }
    }
    let x = x
        .into_iter()
        .enumerate()
        .map(|(e, v)| {
            v.ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("no value for edge {}", instance.edge(e).id),
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(OfflineSolution {
        x,
        value,
        diagnostics,
        trajectory: Vec::new(),
    })
}

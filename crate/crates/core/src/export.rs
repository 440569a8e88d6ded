//! DOT, JSON and CSV exports of cached stages.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::atoms::AtomId;
use crate::pipeline::{PipelineError, Stages};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ExportKind {
    Tree,
    Slice,
    TypeAutomaton,
    GluingAutomaton,
    Metrics,
}

impl ExportKind {
    pub const ALL: [ExportKind; 5] =
        [ExportKind::Tree, ExportKind::Slice, ExportKind::TypeAutomaton, ExportKind::GluingAutomaton, ExportKind::Metrics];
}

fn write(dir: &Path, name: &str, contents: &str, out: &mut Vec<String>) -> Result<(), PipelineError> {
    std::fs::create_dir_all(dir).map_err(|e| PipelineError::Io { path: dir.into(), message: e.to_string() })?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| PipelineError::Io { path: path.clone(), message: e.to_string() })?;
    out.push(name.to_string());
    Ok(())
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("exports serialise");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct AtomRecord {
    id: String,
    parent: Option<String>,
    children: Vec<String>,
    tip: Vec<String>,
    tip_depth: u32,
    hooking: u32,
    stored_members: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    atom_type: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    symbol: Option<String>,
}

/// Writes the requested exports into `dir`; returns the file names written.
/// `level` restricts slice exports to one level.
pub fn export(stages: &Stages, kind: ExportKind, level: Option<u32>, dir: &Path) -> Result<Vec<String>, PipelineError> {
    let mut out = Vec::new();
    let (ball, tree, a) = (&stages.ball, &stages.tree, &stages.analysis);
    let automata = a.automata.as_ref();
    match kind {
        ExportKind::Tree => {
            let mut records = Vec::new();
            let mut dot = String::from("digraph tree {\n");
            for l in &tree.levels {
                for atom in &l.atoms {
                    let id = atom.id;
                    records.push(AtomRecord {
                        id: id.to_string(),
                        parent: atom.parent.map(|p| AtomId::new(id.level - 1, p).to_string()),
                        children: atom.children.iter().map(|&c| AtomId::new(id.level + 1, c).to_string()).collect(),
                        tip: atom.tip.iter().map(|&v| ball.name(v)).collect(),
                        tip_depth: atom.tip_depth,
                        hooking: atom.hooking(),
                        stored_members: atom.members.len(),
                        atom_type: automata.map(|s| s.types.names[s.types.type_of(id) as usize].clone()),
                        symbol: automata.and_then(|s| s.rigid.symbol(id).map(|x| s.rigid.symbols[x as usize].clone())),
                    });
                    let label = automata.map_or_else(|| id.to_string(), |s| format!("{id} {}", s.types.names[s.types.type_of(id) as usize]));
                    let _ = writeln!(dot, "  \"{id}\" [label=\"{label}\"];");
                    if let Some(p) = atom.parent {
                        let _ = writeln!(dot, "  \"{}\" -> \"{id}\";", AtomId::new(id.level - 1, p));
                    }
                }
            }
            dot.push_str("}\n");
            write(dir, "tree.json", &json(&records), &mut out)?;
            write(dir, "tree.dot", &dot, &mut out)?;
        }
        ExportKind::Slice => {
            let levels: Vec<u32> = match level {
                Some(k) => vec![k],
                None => (0..tree.levels.len() as u32).collect(),
            };
            for k in levels {
                let slice = a.atom_graph.horizontal_slice(k).map_err(|e| PipelineError::Stage {
                    stage: "export",
                    message: e.to_string(),
                    hint: "pick a level between 0 and `levels`",
                })?;
                let label = |i: u32| {
                    let id = AtomId::new(k, i);
                    automata.map_or_else(|| id.to_string(), |s| format!("{id} {}", s.types.names[s.types.type_of(id) as usize]))
                };
                write(dir, &format!("slice-{k}.dot"), &slice.to_dot(label), &mut out)?;
            }
        }
        ExportKind::TypeAutomaton => {
            let s = automata.ok_or(PipelineError::StageMissing("types"))?;
            write(dir, "type-automaton.dot", &s.type_automaton.to_dot(), &mut out)?;
            write(dir, "type-automaton.json", &json(&s.type_automaton), &mut out)?;
        }
        ExportKind::GluingAutomaton => {
            let s = automata.ok_or(PipelineError::StageMissing("gluing"))?;
            write(dir, "gluing-automaton.dot", &s.gluing.to_dot(), &mut out)?;
            write(dir, "gluing-automaton.json", &json(&s.gluing), &mut out)?;
        }
        ExportKind::Metrics => {
            let sets: Vec<Vec<(String, String)>> = a
                .deltas
                .iter()
                .enumerate()
                .map(|(k, d)| d.iter().map(|&(x, y)| (AtomId::new(k as u32, x).to_string(), AtomId::new(k as u32, y).to_string())).collect())
                .collect();
            write(dir, "gluing-pairs.json", &json(&sets), &mut out)?;
            let beta = a.constants.beta.value;
            let mut csv = String::from("level,a,b,d_h,t_gamma,t_hausdorff,gromov_product,visual\n");
            for (k, d) in a.deltas.iter().enumerate() {
                let tt = &a.tips[k];
                for &(x, y) in d {
                    let (ia, ib) = (AtomId::new(k as u32, x), AtomId::new(k as u32, y));
                    let dh = tree.atom(ia).signature.iter().zip(&tree.atom(ib).signature).map(|(p, q)| p.abs_diff(*q)).max().unwrap_or(0);
                    let _ = writeln!(
                        csv,
                        "{k},{ia},{ib},{dh},{},{},{},{:.6}",
                        tt.dist(x, y),
                        tt.hausdorff(x, y),
                        tt.product(x, y),
                        tt.visual(x, y, beta)
                    );
                }
            }
            write(dir, "metrics.csv", &csv, &mut out)?;
        }
    }
    Ok(out)
}

pub fn export_all(stages: &Stages, dir: &Path) -> Result<Vec<String>, PipelineError> {
    let mut out = Vec::new();
    for kind in ExportKind::ALL {
        if stages.analysis.automata.is_none() && matches!(kind, ExportKind::TypeAutomaton | ExportKind::GluingAutomaton) {
            continue;
        }
        out.extend(export(stages, kind, None, dir)?);
    }
    Ok(out)
}

pub fn write_manifest(stages: &Stages, artifacts: Vec<String>, dir: &Path) -> Result<PathBuf, PipelineError> {
    let mut names = Vec::new();
    write(dir, "manifest.json", &json(&stages.manifest(artifacts)), &mut names)?;
    Ok(dir.join("manifest.json"))
}

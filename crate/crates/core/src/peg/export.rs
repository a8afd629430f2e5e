use std::fmt::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{label_key, EvolutionGraph};
use crate::error::{Error, Result};

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Dot,
    Json,
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dot" => Ok(ExportFormat::Dot),
            "json" => Ok(ExportFormat::Json),
            other => Err(Error::Validation(format!("unknown export format \"{other}\" (expected dot or json)"))),
        }
    }
}

/// Palette color of a chain label; `chain-N` takes entry `N − 1`, cycling.
pub fn chain_color(label: &str) -> &'static str {
    let idx = match label_key(label).0 {
        usize::MAX => label.bytes().fold(0usize, |h, b| h.wrapping_mul(31).wrapping_add(b as usize)),
        n => n.saturating_sub(1),
    };
    PALETTE[idx % PALETTE.len()]
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' | '\r' => out.push(' '),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn to_dot(g: &EvolutionGraph) -> String {
    let mut out = String::from("digraph peg {\n  rankdir=LR;\n  node [shape=box];\n");
    for n in &g.nodes {
        let _ = writeln!(out, "  {} [label={}];", quote(&n.id), quote(&format!("{} ({})", n.title, n.year)));
    }
    for e in &g.edges {
        let colors: Vec<&str> = e.chains.iter().map(|l| chain_color(l)).collect();
        let _ = writeln!(
            out,
            "  {} -> {} [chain={}, color={}];",
            quote(&e.from),
            quote(&e.to),
            quote(&e.chains.join(",")),
            quote(&colors.join(":"))
        );
    }
    out.push_str("}\n");
    out
}

pub fn export_graph(g: &EvolutionGraph, format: ExportFormat) -> Vec<u8> {
    match format {
        ExportFormat::Dot => to_dot(g).into_bytes(),
        ExportFormat::Json => {
            let mut v = serde_json::to_vec_pretty(g).expect("graph serializes");
            v.push(b'\n');
            v
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::{corpus, labeled, one_community};
    use super::super::merge_chains;
    use super::*;

    fn graph() -> EvolutionGraph {
        let c = corpus(6);
        let terms = vec!["alpha".to_string(), "beta".to_string()];
        merge_chains(&c, &one_community(6), &terms, &[labeled(&c, "chain-1", &[0, 1, 3, 5]), labeled(&c, "chain-2", &[1, 3, 4])]).unwrap()
    }

    #[test]
    fn two_node_graph_counts() {
        let c = corpus(2);
        let g = merge_chains(&c, &one_community(2), &[], &[labeled(&c, "chain-1", &[0, 1])]).unwrap();
        let dot = String::from_utf8(export_graph(&g, ExportFormat::Dot)).unwrap();
        assert_eq!(dot.lines().filter(|l| l.contains("[label=")).count(), 2);
        assert_eq!(dot.lines().filter(|l| l.contains("->")).count(), 1);
        assert!(dot.contains(r#"[label="Paper \"0\" (2000)"]"#));
        assert!(dot.contains(r##"[chain="chain-1", color="#1f77b4"]"##));
    }

    #[test]
    fn shared_edges_carry_every_color() {
        let dot = String::from_utf8(export_graph(&graph(), ExportFormat::Dot)).unwrap();
        assert!(dot.contains(r##""p01" -> "p03" [chain="chain-1,chain-2", color="#1f77b4:#ff7f0e"];"##));
        assert_eq!(chain_color("chain-9"), chain_color("chain-1"));
    }

    #[test]
    fn exports_are_stable_and_json_round_trips() {
        let g = graph();
        for f in [ExportFormat::Dot, ExportFormat::Json] {
            assert_eq!(export_graph(&g, f), export_graph(&graph(), f));
        }
        let json = export_graph(&g, ExportFormat::Json);
        assert_eq!(EvolutionGraph::from_json(&json).unwrap(), g);
        let text = String::from_utf8(json).unwrap();
        let (n, e, c) = (text.find("\"nodes\"").unwrap(), text.find("\"edges\"").unwrap(), text.find("\"chains\"").unwrap());
        assert!(n < e && e < c);
    }

    #[test]
    fn unknown_format_is_a_validation_error() {
        assert_eq!("DOT".parse::<ExportFormat>().unwrap(), ExportFormat::Dot);
        assert!(matches!("svg".parse::<ExportFormat>(), Err(Error::Validation(_))));
    }
}

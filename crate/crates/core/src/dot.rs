//! Graphviz rendering.
//!
//! Each lane becomes a cluster. Data places are circles (filled when
//! initially marked), input events are triangles, output events inverted
//! triangles, and transitions thin boxes; triggered transitions get a
//! double border. Role tags appear as external labels.

use std::fmt::Write as _;

use crate::model::{Direction, Net, PlaceRole, PriorityClass};

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn caption(id: &str, label: &str) -> String {
    if label.is_empty() {
        id.to_string()
    } else {
        format!("{id}\n{label}")
    }
}

pub fn to_dot(net: &Net) -> String {
    let mut out = String::from("digraph edpn {\n  rankdir=LR;\n  node [fontsize=10];\n");
    for lane in net.lanes() {
        let l = lane.id.as_str();
        let _ = writeln!(out, "  subgraph {} {{", quote(&format!("cluster_{l}")));
        let name = if lane.name.is_empty() { l } else { &lane.name };
        let _ = writeln!(out, "    label={};", quote(name));
        for e in net.events().filter(|e| e.lane == lane.id) {
            let shape = match e.direction {
                Direction::Input => "triangle",
                Direction::Output => "invtriangle",
            };
            let _ = writeln!(
                out,
                "    {} [shape={shape}, label={}];",
                quote(e.id.as_str()),
                quote(&caption(e.id.as_str(), &e.label))
            );
        }
        for p in net.places().filter(|p| p.lane == lane.id) {
            let mut attrs = format!("shape=circle, label={}", quote(&caption(p.id.as_str(), &p.label)));
            let tokens = net.initial_marking().tokens(p.id.as_str());
            if tokens > 0 {
                let _ = write!(
                    attrs,
                    ", style=filled, fillcolor=lightgray, tooltip={}",
                    quote(&format!("{tokens} token(s)"))
                );
            }
            let role = net.role(p.id.as_str());
            if role != PlaceRole::Plain {
                let _ = write!(attrs, ", xlabel={}", quote(role.name()));
            }
            let _ = writeln!(out, "    {} [{attrs}];", quote(p.id.as_str()));
        }
        for t in net.transitions().filter(|t| t.lane == lane.id) {
            let border = match t.priority {
                PriorityClass::Triggered => ", peripheries=2",
                PriorityClass::Normal => "",
            };
            let _ = writeln!(
                out,
                "    {} [shape=box, height=0.2{border}, label={}];",
                quote(t.id.as_str()),
                quote(&caption(t.id.as_str(), &t.label))
            );
        }
        out.push_str("  }\n");
    }
    for a in net.arcs() {
        let _ = writeln!(out, "  {} -> {};", quote(a.source.as_str()), quote(a.target.as_str()));
    }
    out.push_str("}\n");
    out
}

//! Association diagrams: terminals on the left, base stations on the right.
//! Row `i` holds MT i and BS i; MT i also hears BS i-1, drawn as the diagonal
//! between rows.

use std::collections::BTreeSet;
use std::fmt::Write;

use cellassoc::model::CellAssociation;

/// Nodes drawn as inactive.
#[derive(Debug, Clone, Default)]
pub struct Overlay {
    pub inactive_mt: BTreeSet<usize>,
    pub silent_bs: BTreeSet<usize>,
}

fn label(kind: &str, i: usize, off: bool) -> String {
    format!("{kind}{i}{}", if off { "*" } else { "" })
}

fn cell_text(c: &BTreeSet<usize>) -> String {
    let items: Vec<String> = c.iter().map(|j| j.to_string()).collect();
    format!("{{{}}}", items.join(","))
}

pub fn ascii(assoc: &CellAssociation, overlay: &Overlay) -> String {
    let k = assoc.k;
    let width = label("MT", k, true).len();
    let mut out = String::new();
    for i in 1..=k {
        if i > 1 {
            let glyph = if assoc.cell(i).contains(&(i - 1)) {
                "//"
            } else {
                "/ "
            };
            let line = format!("{:w$}      {glyph}", "", w = width);
            writeln!(out, "{}", line.trim_end()).unwrap();
        }
        let edge = if assoc.cell(i).contains(&i) {
            "======="
        } else {
            "-------"
        };
        let mt = label("MT", i, overlay.inactive_mt.contains(&i));
        let bs = label("BS", i, overlay.silent_bs.contains(&i));
        let line = format!(
            "{mt:<width$} {edge} {bs:<width$}   C{i} = {}",
            cell_text(assoc.cell(i))
        );
        writeln!(out, "{}", line.trim_end()).unwrap();
    }
    out.push('\n');
    out.push_str(
        "legend: --- link   === link in C_i   /  link to BS i-1   // link to BS i-1 in C_i\n",
    );
    out.push_str("        * inactive terminal or silent base station\n");
    out
}

const ROW: usize = 60;
const TOP: usize = 40;
const MT_X: usize = 80;
const BS_X: usize = 320;
const R: usize = 18;

fn y(i: usize) -> usize {
    TOP + (i - 1) * ROW
}

fn edge(out: &mut String, x1: usize, y1: usize, x2: usize, y2: usize, associated: bool) {
    let (stroke, w) = if associated {
        ("#1f4e9c", 3)
    } else {
        ("#999999", 1)
    };
    writeln!(
        out,
        r#"  <line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="{stroke}" stroke-width="{w}"/>"#
    )
    .unwrap();
}

fn node(out: &mut String, x: usize, yy: usize, text: &str, off: bool) {
    let style = if off {
        r##"fill="white" stroke="#d62728" stroke-width="2" stroke-dasharray="4 3""##
    } else {
        r##"fill="white" stroke="#333333" stroke-width="1.5""##
    };
    writeln!(out, r#"  <circle cx="{x}" cy="{yy}" r="{R}" {style}/>"#).unwrap();
    writeln!(
        out,
        r#"  <text x="{x}" y="{}" font-family="monospace" font-size="11" text-anchor="middle">{text}</text>"#,
        yy + 4
    )
    .unwrap();
}

pub fn svg(assoc: &CellAssociation, overlay: &Overlay) -> String {
    let k = assoc.k;
    let height = TOP + (k - 1) * ROW + TOP;
    let width = BS_X + 160;
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    )
    .unwrap();
    for i in 1..=k {
        edge(
            &mut out,
            MT_X + R,
            y(i),
            BS_X - R,
            y(i),
            assoc.cell(i).contains(&i),
        );
        if i > 1 {
            edge(
                &mut out,
                MT_X + R,
                y(i),
                BS_X - R,
                y(i - 1),
                assoc.cell(i).contains(&(i - 1)),
            );
        }
    }
    for i in 1..=k {
        node(
            &mut out,
            MT_X,
            y(i),
            &format!("MT{i}"),
            overlay.inactive_mt.contains(&i),
        );
        node(
            &mut out,
            BS_X,
            y(i),
            &format!("BS{i}"),
            overlay.silent_bs.contains(&i),
        );
        writeln!(
            out,
            r#"  <text x="{}" y="{}" font-family="monospace" font-size="11">C{i} = {}</text>"#,
            BS_X + 30,
            y(i) + 4,
            cell_text(assoc.cell(i))
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}

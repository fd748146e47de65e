//! Minimal GraphML and GEXF writers for undirected attributed graphs.

use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttrType {
    String,
    Int,
    Double,
}

impl AttrType {
    fn name(self) -> &'static str {
        match self {
            AttrType::String => "string",
            AttrType::Int => "int",
            AttrType::Double => "double",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttrValue {
    Str(String),
    Int(i64),
    Double(f64),
}

impl AttrValue {
    fn render(&self) -> String {
        match self {
            AttrValue::Str(s) => s.clone(),
            AttrValue::Int(i) => i.to_string(),
            AttrValue::Double(d) => d.to_string(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ExportGraph {
    pub node_attrs: Vec<(&'static str, AttrType)>,
    pub edge_attrs: Vec<(&'static str, AttrType)>,
    /// (id, attribute values aligned with `node_attrs`)
    pub nodes: Vec<(String, Vec<AttrValue>)>,
    /// (source id, target id, values aligned with `edge_attrs`)
    pub edges: Vec<(String, String, Vec<AttrValue>)>,
}

pub fn escape_xml(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

impl ExportGraph {
    pub fn to_graphml(&self) -> String {
        let mut s = String::new();
        s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        s.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
        for (name, ty) in &self.node_attrs {
            let _ = writeln!(
                s,
                "  <key id=\"{name}\" for=\"node\" attr.name=\"{name}\" attr.type=\"{}\"/>",
                ty.name()
            );
        }
        for (name, ty) in &self.edge_attrs {
            let _ = writeln!(
                s,
                "  <key id=\"{name}\" for=\"edge\" attr.name=\"{name}\" attr.type=\"{}\"/>",
                ty.name()
            );
        }
        s.push_str("  <graph id=\"G\" edgedefault=\"undirected\">\n");
        for (id, values) in &self.nodes {
            let _ = writeln!(s, "    <node id=\"{}\">", escape_xml(id));
            for ((name, _), v) in self.node_attrs.iter().zip(values) {
                let _ = writeln!(
                    s,
                    "      <data key=\"{name}\">{}</data>",
                    escape_xml(&v.render())
                );
            }
            s.push_str("    </node>\n");
        }
        for (i, (src, dst, values)) in self.edges.iter().enumerate() {
            let _ = writeln!(
                s,
                "    <edge id=\"e{i}\" source=\"{}\" target=\"{}\">",
                escape_xml(src),
                escape_xml(dst)
            );
            for ((name, _), v) in self.edge_attrs.iter().zip(values) {
                let _ = writeln!(
                    s,
                    "      <data key=\"{name}\">{}</data>",
                    escape_xml(&v.render())
                );
            }
            s.push_str("    </edge>\n");
        }
        s.push_str("  </graph>\n</graphml>\n");
        s
    }

    /// GEXF 1.3. The first string node attribute doubles as the node label.
    pub fn to_gexf(&self) -> String {
        let mut s = String::new();
        s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        s.push_str("<gexf xmlns=\"http://gexf.net/1.3\" version=\"1.3\">\n");
        s.push_str("  <graph mode=\"static\" defaultedgetype=\"undirected\">\n");
        let attr_block = |s: &mut String, class: &str, attrs: &[(&str, AttrType)]| {
            if attrs.is_empty() {
                return;
            }
            let _ = writeln!(s, "    <attributes class=\"{class}\">");
            for (i, (name, ty)) in attrs.iter().enumerate() {
                let ty = if *ty == AttrType::Int {
                    "integer"
                } else {
                    ty.name()
                };
                let _ = writeln!(
                    s,
                    "      <attribute id=\"{i}\" title=\"{name}\" type=\"{ty}\"/>"
                );
            }
            s.push_str("    </attributes>\n");
        };
        attr_block(&mut s, "node", &self.node_attrs);
        attr_block(&mut s, "edge", &self.edge_attrs);

        let label_idx = self
            .node_attrs
            .iter()
            .position(|(_, t)| *t == AttrType::String);
        s.push_str("    <nodes>\n");
        for (id, values) in &self.nodes {
            let label = label_idx
                .map(|i| values[i].render())
                .unwrap_or_else(|| id.clone());
            let _ = writeln!(
                s,
                "      <node id=\"{}\" label=\"{}\">",
                escape_xml(id),
                escape_xml(&label)
            );
            write_attvalues(&mut s, values);
            s.push_str("      </node>\n");
        }
        s.push_str("    </nodes>\n    <edges>\n");
        for (i, (src, dst, values)) in self.edges.iter().enumerate() {
            let _ = writeln!(
                s,
                "      <edge id=\"e{i}\" source=\"{}\" target=\"{}\">",
                escape_xml(src),
                escape_xml(dst)
            );
            write_attvalues(&mut s, values);
            s.push_str("      </edge>\n");
        }
        s.push_str("    </edges>\n  </graph>\n</gexf>\n");
        s
    }
}

fn write_attvalues(s: &mut String, values: &[AttrValue]) {
    if values.is_empty() {
        return;
    }
    s.push_str("        <attvalues>\n");
    for (i, v) in values.iter().enumerate() {
        let _ = writeln!(
            s,
            "          <attvalue for=\"{i}\" value=\"{}\"/>",
            escape_xml(&v.render())
        );
    }
    s.push_str("        </attvalues>\n");
}

//! OpenDrive subset emitter and parser.
//!
//! Emitted documents contain one `header`, one `road` per segment
//! (`name="segment"`, `"connector"` or `"ring"`, `junction="-1"`), one
//! `junction` per junction cell, and one junction-internal connecting road
//! (`name="connecting"`) per ordered pair of distinct arms. Every segment
//! road has one `geometry` per cell it crosses; connectors have a single
//! 9 m line between the two junction centers. Road ids start at 1, segments
//! first; junction ids start at 1. Headings are radians, lengths meters.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use roxmltree::{Document, Node};

use super::{
    cell_at, cell_center, cell_piece, Arm, Contact, JunctionNode, Piece,
    RoadKind, RoadTopology, RoadnetError, Segment, SegmentEnd, BLOCK, LANE_WIDTH,
};
use crate::grid::{Direction, Position};

const EPS: f64 = 1e-6;

fn road_xml_id(segment: usize) -> usize {
    segment + 1
}

fn junction_xml_id(junction: usize) -> usize {
    junction + 1
}

fn contact_name(c: Contact) -> &'static str {
    match c {
        Contact::Start => "start",
        Contact::End => "end",
    }
}

fn write_plan_view(out: &mut String, pieces: &[Piece]) {
    out.push_str("    <planView>\n");
    let mut s = 0.0;
    for p in pieces {
        let _ = writeln!(
            out,
            "      <geometry s=\"{s}\" x=\"{}\" y=\"{}\" hdg=\"{}\" length=\"{}\">",
            p.start.0, p.start.1, p.hdg, p.length
        );
        if p.curvature == 0.0 {
            out.push_str("        <line/>\n");
        } else {
            let _ = writeln!(out, "        <arc curvature=\"{}\"/>", p.curvature);
        }
        out.push_str("      </geometry>\n");
        s += p.length;
    }
    out.push_str("    </planView>\n");
}

fn write_lanes(out: &mut String) {
    let lane = |id: i32| {
        format!(
            "          <lane id=\"{id}\" type=\"driving\" level=\"false\">\n            <width sOffset=\"0\" a=\"{LANE_WIDTH}\" b=\"0\" c=\"0\" d=\"0\"/>\n          </lane>\n"
        )
    };
    out.push_str("    <lanes>\n      <laneSection s=\"0\">\n");
    let _ = write!(out, "        <left>\n{}        </left>\n", lane(1));
    out.push_str("        <center>\n          <lane id=\"0\" type=\"none\" level=\"false\"/>\n        </center>\n");
    let _ = write!(out, "        <right>\n{}        </right>\n", lane(-1));
    out.push_str("      </laneSection>\n    </lanes>\n");
}

fn link_xml(tag: &str, end: SegmentEnd) -> String {
    match end {
        SegmentEnd::Junction(j) => format!(
            "      <{tag} elementType=\"junction\" elementId=\"{}\"/>\n",
            junction_xml_id(j)
        ),
        _ => String::new(),
    }
}

fn connecting_piece(j: &JunctionNode, from: Direction, to: Direction) -> Piece {
    cell_piece(j.pos, Some(from), Some(to)).expect("both sides given")
}

pub fn emit_opendrive(t: &RoadTopology) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<OpenDRIVE>\n");
    let _ = writeln!(
        out,
        "  <header revMajor=\"1\" revMinor=\"6\" name=\"garage\" version=\"1\" north=\"0\" south=\"{}\" east=\"{}\" west=\"0\"/>",
        -(t.height as f64 * BLOCK),
        t.width as f64 * BLOCK
    );
    for s in &t.segments {
        let pieces = t.segment_pieces(s);
        let length: f64 = pieces.iter().map(|p| p.length).sum();
        let name = if s.connector {
            "connector"
        } else if s.start == SegmentEnd::Closed {
            "ring"
        } else {
            "segment"
        };
        let _ = writeln!(
            out,
            "  <road name=\"{name}\" length=\"{length}\" id=\"{}\" junction=\"-1\">",
            road_xml_id(s.id)
        );
        let links = link_xml("predecessor", s.start) + &link_xml("successor", s.end);
        if !links.is_empty() {
            let _ = write!(out, "    <link>\n{links}    </link>\n");
        }
        write_plan_view(&mut out, &pieces);
        write_lanes(&mut out);
        out.push_str("  </road>\n");
    }

    let mut next_road = t.segments.len() + 1;
    let mut junction_xml = String::new();
    for j in &t.junctions {
        let _ = writeln!(junction_xml, "  <junction id=\"{}\" name=\"\">", junction_xml_id(j.id));
        let mut conn = 0;
        for a in &j.arms {
            for b in &j.arms {
                if a.dir == b.dir {
                    continue;
                }
                let piece = connecting_piece(j, a.dir, b.dir);
                let id = next_road;
                next_road += 1;
                let _ = writeln!(
                    out,
                    "  <road name=\"connecting\" length=\"{}\" id=\"{id}\" junction=\"{}\">",
                    piece.length,
                    junction_xml_id(j.id)
                );
                let _ = write!(
                    out,
                    "    <link>\n      <predecessor elementType=\"road\" elementId=\"{}\" contactPoint=\"{}\"/>\n      <successor elementType=\"road\" elementId=\"{}\" contactPoint=\"{}\"/>\n    </link>\n",
                    road_xml_id(a.road),
                    contact_name(a.contact),
                    road_xml_id(b.road),
                    contact_name(b.contact)
                );
                write_plan_view(&mut out, &[piece]);
                write_lanes(&mut out);
                out.push_str("  </road>\n");
                let from_lane = if a.contact == Contact::End { -1 } else { 1 };
                let _ = write!(
                    junction_xml,
                    "    <connection id=\"{conn}\" incomingRoad=\"{}\" connectingRoad=\"{id}\" contactPoint=\"start\">\n      <laneLink from=\"{from_lane}\" to=\"-1\"/>\n    </connection>\n",
                    road_xml_id(a.road)
                );
                conn += 1;
            }
        }
        junction_xml.push_str("  </junction>\n");
    }
    out.push_str(&junction_xml);
    out.push_str("</OpenDRIVE>\n");
    out
}

fn schema(msg: impl Into<String>) -> RoadnetError {
    RoadnetError::SchemaViolation(msg.into())
}

fn attr<'a>(n: Node<'a, '_>, name: &str) -> Result<&'a str, RoadnetError> {
    n.attribute(name)
        .ok_or_else(|| schema(format!("<{}> lacks attribute {name}", n.tag_name().name())))
}

fn num<T: std::str::FromStr>(n: Node, name: &str) -> Result<T, RoadnetError> {
    attr(n, name)?
        .parse()
        .map_err(|_| schema(format!("<{}> has malformed {name}", n.tag_name().name())))
}

fn child<'a, 'i>(n: Node<'a, 'i>, tag: &str) -> Option<Node<'a, 'i>> {
    n.children().find(|c| c.has_tag_name(tag))
}

#[derive(Debug)]
struct RawLink {
    element_type: String,
    id: usize,
    contact: Option<Contact>,
}

#[derive(Debug)]
struct RawRoad {
    id: usize,
    name: String,
    junction: i64,
    pieces: Vec<Piece>,
    predecessor: Option<RawLink>,
    successor: Option<RawLink>,
}

fn parse_link(n: Option<Node>) -> Result<Option<RawLink>, RoadnetError> {
    let Some(n) = n else { return Ok(None) };
    let contact = match n.attribute("contactPoint") {
        None => None,
        Some("start") => Some(Contact::Start),
        Some("end") => Some(Contact::End),
        Some(other) => return Err(schema(format!("unknown contactPoint {other}"))),
    };
    Ok(Some(RawLink {
        element_type: attr(n, "elementType")?.to_string(),
        id: num(n, "elementId")?,
        contact,
    }))
}

fn parse_road(n: Node) -> Result<RawRoad, RoadnetError> {
    let id: usize = num(n, "id")?;
    let length: f64 = num(n, "length")?;
    let plan = child(n, "planView").ok_or_else(|| schema(format!("road {id} has no planView")))?;
    let mut pieces = Vec::new();
    let mut s_expected = 0.0;
    for g in plan.children().filter(|c| c.has_tag_name("geometry")) {
        let s: f64 = num(g, "s")?;
        if (s - s_expected).abs() > EPS {
            return Err(schema(format!("road {id}: geometry s={s}, expected {s_expected}")));
        }
        let curvature = if child(g, "line").is_some() {
            0.0
        } else if let Some(arc) = child(g, "arc") {
            num(arc, "curvature")?
        } else {
            return Err(schema(format!("road {id}: geometry without line or arc")));
        };
        let piece = Piece {
            start: (num(g, "x")?, num(g, "y")?),
            hdg: num(g, "hdg")?,
            length: num(g, "length")?,
            curvature,
        };
        s_expected += piece.length;
        pieces.push(piece);
    }
    if pieces.is_empty() {
        return Err(schema(format!("road {id} has no geometry")));
    }
    if (s_expected - length).abs() > EPS {
        return Err(schema(format!("road {id}: length {length} but geometry sums to {s_expected}")));
    }
    let link = child(n, "link");
    Ok(RawRoad {
        id,
        name: n.attribute("name").unwrap_or_default().to_string(),
        junction: num(n, "junction")?,
        pieces,
        predecessor: parse_link(link.and_then(|l| child(l, "predecessor")))?,
        successor: parse_link(link.and_then(|l| child(l, "successor")))?,
    })
}

/// Cell a piece starts in, probed half a meter along its heading.
fn probe_cell(p: &Piece) -> Result<Position, RoadnetError> {
    let (x, y) = p.point_at(0.5);
    cell_at(x, y).ok_or_else(|| schema(format!("geometry at ({x}, {y}) lies outside the grid")))
}

/// Side of `cell` whose midpoint is `p`.
fn boundary_side(cell: Position, p: (f64, f64)) -> Option<Direction> {
    let (cx, cy) = cell_center(cell);
    let (dx, dy) = (p.0 - cx, p.1 - cy);
    let d = if dx.abs() > dy.abs() {
        if dx > 0.0 { Direction::Right } else { Direction::Left }
    } else if dy > 0.0 {
        Direction::Up
    } else {
        Direction::Down
    };
    ((dx.abs().max(dy.abs()) - super::HALF).abs() < EPS && dx.abs().min(dy.abs()) < EPS).then_some(d)
}

pub fn parse_opendrive(xml: &str) -> Result<RoadTopology, RoadnetError> {
    let doc = Document::parse(xml).map_err(|e| schema(e.to_string()))?;
    let root = doc.root_element();
    if !root.has_tag_name("OpenDRIVE") {
        return Err(schema("root element is not OpenDRIVE"));
    }
    let header = child(root, "header").ok_or_else(|| schema("missing header"))?;
    let east: f64 = num(header, "east")?;
    let south: f64 = num(header, "south")?;
    let width = (east / BLOCK).round() as usize;
    let height = (-south / BLOCK).round() as usize;

    let roads = root
        .children()
        .filter(|c| c.has_tag_name("road"))
        .map(parse_road)
        .collect::<Result<Vec<_>, _>>()?;
    let mut road_ids = BTreeMap::new();
    for (i, r) in roads.iter().enumerate() {
        if road_ids.insert(r.id, i).is_some() {
            return Err(schema(format!("duplicate road id {}", r.id)));
        }
    }
    let junction_nodes: Vec<Node> = root.children().filter(|c| c.has_tag_name("junction")).collect();
    let mut junction_index = BTreeMap::new();
    for (i, j) in junction_nodes.iter().enumerate() {
        let id: usize = num(*j, "id")?;
        if id == 0 || junction_index.insert(id, i).is_some() {
            return Err(schema(format!("bad or duplicate junction id {id}")));
        }
    }

    let to_end = |link: &Option<RawLink>, fallback: SegmentEnd| -> Result<SegmentEnd, RoadnetError> {
        match link {
            None => Ok(fallback),
            Some(l) if l.element_type == "junction" => junction_index
                .get(&l.id)
                .map(|&i| SegmentEnd::Junction(i))
                .ok_or_else(|| RoadnetError::LinkageError(format!("junction {} does not exist", l.id))),
            Some(l) => Err(schema(format!("segment link to {} {}", l.element_type, l.id))),
        }
    };

    let mut segments = Vec::new();
    for r in roads.iter().filter(|r| r.junction == -1) {
        if r.id == 0 {
            return Err(schema("road id 0"));
        }
        let (cells, connector, fallback) = match r.name.as_str() {
            "connector" => (Vec::new(), true, SegmentEnd::Cap),
            "ring" => (
                r.pieces.iter().map(probe_cell).collect::<Result<_, _>>()?,
                false,
                SegmentEnd::Closed,
            ),
            "segment" => (
                r.pieces.iter().map(probe_cell).collect::<Result<_, _>>()?,
                false,
                SegmentEnd::Cap,
            ),
            other => return Err(schema(format!("road {} has unknown name {other:?}", r.id))),
        };
        let start = to_end(&r.predecessor, fallback)?;
        let end = to_end(&r.successor, fallback)?;
        if connector && !(matches!(start, SegmentEnd::Junction(_)) && matches!(end, SegmentEnd::Junction(_))) {
            return Err(RoadnetError::LinkageError(format!("connector {} must join two junctions", r.id)));
        }
        segments.push(Segment {
            id: r.id - 1,
            cells,
            start,
            end,
            connector,
        });
    }
    segments.sort_by_key(|s| s.id);

    let mut junctions = Vec::new();
    for (i, jn) in junction_nodes.iter().enumerate() {
        let xml_id: usize = num(*jn, "id")?;
        let mut arms: BTreeMap<usize, Arm> = BTreeMap::new();
        let mut pos: Option<Position> = None;
        let connections: Vec<Node> = jn.children().filter(|c| c.has_tag_name("connection")).collect();
        for c in &connections {
            let incoming: usize = num(*c, "incomingRoad")?;
            let connecting: usize = num(*c, "connectingRoad")?;
            let link_err = |what: &str, id: usize| RoadnetError::LinkageError(format!("junction {xml_id}: {what} {id} does not exist"));
            let cr = road_ids
                .get(&connecting)
                .map(|&k| &roads[k])
                .ok_or_else(|| link_err("connecting road", connecting))?;
            if !road_ids.contains_key(&incoming) {
                return Err(link_err("incoming road", incoming));
            }
            if cr.junction != xml_id as i64 {
                return Err(RoadnetError::LinkageError(format!(
                    "road {connecting} is not inside junction {xml_id}"
                )));
            }
            let pred = cr
                .predecessor
                .as_ref()
                .filter(|l| l.element_type == "road" && l.id == incoming)
                .ok_or_else(|| RoadnetError::LinkageError(format!("road {connecting} does not start at road {incoming}")))?;
            if let Some(succ) = &cr.successor {
                if !road_ids.contains_key(&succ.id) {
                    return Err(link_err("outgoing road", succ.id));
                }
            }
            let piece = &cr.pieces[0];
            let cell = probe_cell(piece)?;
            if *pos.get_or_insert(cell) != cell {
                return Err(schema(format!("junction {xml_id} spans several cells")));
            }
            let entry = boundary_side(cell, piece.start)
                .ok_or_else(|| schema(format!("road {connecting} does not start on the junction boundary")))?;
            arms.insert(
                entry.index(),
                Arm {
                    dir: entry,
                    road: incoming - 1,
                    contact: pred.contact.unwrap_or(Contact::End),
                },
            );
        }
        let arms: Vec<Arm> = arms.into_values().collect();
        let kind = match arms.len() {
            3 => RoadKind::TJunction,
            4 => RoadKind::Cross,
            n => return Err(schema(format!("junction {xml_id} joins {n} roads, need at least 3"))),
        };
        junctions.push(JunctionNode {
            id: i,
            pos: pos.expect("junction has connections"),
            kind,
            arms,
        });
    }
    Ok(RoadTopology {
        width,
        height,
        segments,
        junctions,
    })
}

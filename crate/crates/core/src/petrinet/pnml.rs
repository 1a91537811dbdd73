//! PNML import and export for accepting Petri nets.
//!
//! A core-model subset is supported: places with names and initial
//! markings, transitions with names, and unweighted arcs. Silent
//! transitions carry the usual `<toolspecific tool="ProM" activity="$invisible$"/>`
//! marker. The final marking is written as a `<finalmarkings>` element
//! inside `<net>`, listing `<place idref=..><text>n</text></place>` entries;
//! this is the layout ProM uses for accepting Petri nets.
//!
//! Visible transitions are named by their label. After a round trip, a
//! visible transition's name equals its label.

use std::collections::{BTreeMap, HashMap};

use quick_xml::events::{BytesDecl, BytesEnd, BytesStart, BytesText, Event as XmlEvent};
use quick_xml::{Reader, Writer};

use super::{AcceptingPetriNet, LabeledPetriNet, Marking, PlaceId, TransitionId};
use crate::eventlog::Activity;
use crate::{Error, Result};

const INVISIBLE: &str = "$invisible$";

/// Extra `(key, value)` attributes emitted on a transition as
/// `<toolspecific tool="evabs" key="value" .../>`.
pub type Annotations = BTreeMap<TransitionId, Vec<(String, String)>>;

pub fn write_pnml(net: &AcceptingPetriNet, name: &str) -> String {
    write_pnml_annotated(net, name, &Annotations::new())
}

pub fn write_pnml_annotated(net: &AcceptingPetriNet, name: &str, annotations: &Annotations) -> String {
    let mut w = Writer::new_with_indent(Vec::new(), b' ', 2);
    emit(&mut w, net, name, annotations).expect("writing to a Vec cannot fail");
    let mut text = String::from_utf8(w.into_inner()).expect("writer emits UTF-8");
    text.push('\n');
    text
}

fn text_element(w: &mut Writer<Vec<u8>>, tag: &str, text: &str) -> std::io::Result<()> {
    w.write_event(XmlEvent::Start(BytesStart::new(tag)))?;
    w.write_event(XmlEvent::Start(BytesStart::new("text")))?;
    w.write_event(XmlEvent::Text(BytesText::new(text)))?;
    w.write_event(XmlEvent::End(BytesEnd::new("text")))?;
    w.write_event(XmlEvent::End(BytesEnd::new(tag)))
}

fn emit(
    w: &mut Writer<Vec<u8>>,
    apn: &AcceptingPetriNet,
    name: &str,
    annotations: &Annotations,
) -> std::io::Result<()> {
    let net = apn.net();
    w.write_event(XmlEvent::Decl(BytesDecl::new("1.0", Some("UTF-8"), None)))?;
    w.write_event(XmlEvent::Start(BytesStart::new("pnml")))?;
    w.write_event(XmlEvent::Start(BytesStart::new("net").with_attributes([
        ("id", "net1"),
        ("type", "http://www.pnml.org/version-2009/grammar/pnmlcoremodel"),
    ])))?;
    text_element(w, "name", name)?;
    w.write_event(XmlEvent::Start(
        BytesStart::new("page").with_attributes([("id", "page1")]),
    ))?;

    for p in net.places() {
        let id = format!("p{}", p.0);
        w.write_event(XmlEvent::Start(
            BytesStart::new("place").with_attributes([("id", id.as_str())]),
        ))?;
        text_element(w, "name", net.place_name(p))?;
        let tokens = apn.initial().get(p);
        if tokens > 0 {
            text_element(w, "initialMarking", &tokens.to_string())?;
        }
        w.write_event(XmlEvent::End(BytesEnd::new("place")))?;
    }

    for (t, tr) in net.transitions() {
        let id = format!("t{}", t.0);
        w.write_event(XmlEvent::Start(
            BytesStart::new("transition").with_attributes([("id", id.as_str())]),
        ))?;
        match &tr.label {
            Some(label) => text_element(w, "name", label.label())?,
            None => {
                text_element(w, "name", &tr.name)?;
                w.write_event(XmlEvent::Empty(BytesStart::new("toolspecific").with_attributes([
                    ("tool", "ProM"),
                    ("version", "6.4"),
                    ("activity", INVISIBLE),
                ])))?;
            }
        }
        if let Some(extra) = annotations.get(&t) {
            let mut elem = BytesStart::new("toolspecific");
            elem.push_attribute(("tool", "evabs"));
            for (k, v) in extra {
                elem.push_attribute((k.as_str(), v.as_str()));
            }
            w.write_event(XmlEvent::Empty(elem))?;
        }
        w.write_event(XmlEvent::End(BytesEnd::new("transition")))?;
    }

    let mut arc_no = 0usize;
    for (t, tr) in net.transitions() {
        let tid = format!("t{}", t.0);
        for p in tr.inputs() {
            let pid = format!("p{}", p.0);
            let aid = format!("a{arc_no}");
            arc_no += 1;
            w.write_event(XmlEvent::Empty(BytesStart::new("arc").with_attributes([
                ("id", aid.as_str()),
                ("source", pid.as_str()),
                ("target", tid.as_str()),
            ])))?;
        }
        for p in tr.outputs() {
            let pid = format!("p{}", p.0);
            let aid = format!("a{arc_no}");
            arc_no += 1;
            w.write_event(XmlEvent::Empty(BytesStart::new("arc").with_attributes([
                ("id", aid.as_str()),
                ("source", tid.as_str()),
                ("target", pid.as_str()),
            ])))?;
        }
    }
    w.write_event(XmlEvent::End(BytesEnd::new("page")))?;

    w.write_event(XmlEvent::Start(BytesStart::new("finalmarkings")))?;
    w.write_event(XmlEvent::Start(BytesStart::new("marking")))?;
    for (p, tokens) in apn.final_marking().support() {
        let pid = format!("p{}", p.0);
        w.write_event(XmlEvent::Start(
            BytesStart::new("place").with_attributes([("idref", pid.as_str())]),
        ))?;
        w.write_event(XmlEvent::Start(BytesStart::new("text")))?;
        w.write_event(XmlEvent::Text(BytesText::new(&tokens.to_string())))?;
        w.write_event(XmlEvent::End(BytesEnd::new("text")))?;
        w.write_event(XmlEvent::End(BytesEnd::new("place")))?;
    }
    w.write_event(XmlEvent::End(BytesEnd::new("marking")))?;
    w.write_event(XmlEvent::End(BytesEnd::new("finalmarkings")))?;

    w.write_event(XmlEvent::End(BytesEnd::new("net")))?;
    w.write_event(XmlEvent::End(BytesEnd::new("pnml")))?;
    Ok(())
}

#[derive(Default)]
struct RawPlace {
    id: String,
    name: Option<String>,
    tokens: u32,
}

#[derive(Default)]
struct RawTransition {
    id: String,
    name: Option<String>,
    invisible: bool,
}

fn attr(start: &BytesStart<'_>, key: &[u8]) -> Result<Option<String>> {
    for a in start.attributes() {
        let a = a.map_err(|e| Error::Format(format!("PNML attribute: {e}")))?;
        if a.key.as_ref() == key {
            let v = a
                .unescape_value()
                .map_err(|e| Error::Format(format!("PNML attribute: {e}")))?;
            return Ok(Some(v.into_owned()));
        }
    }
    Ok(None)
}

fn parse_count(text: &str) -> Result<u32> {
    text.trim()
        .parse()
        .map_err(|_| Error::Format(format!("bad token count {text:?}")))
}

/// Reads the first net of a PNML document. A missing `<finalmarkings>`
/// section yields the empty final marking.
pub fn read_pnml(document: &[u8]) -> Result<AcceptingPetriNet> {
    let mut reader = Reader::from_reader(document);
    reader.config_mut().trim_text(true);
    let mut buf = Vec::new();
    let mut path: Vec<String> = Vec::new();

    let mut places: Vec<RawPlace> = Vec::new();
    let mut transitions: Vec<RawTransition> = Vec::new();
    let mut arcs: Vec<(String, String)> = Vec::new();
    let mut final_tokens: Vec<(String, u32)> = Vec::new();
    let mut final_idref: Option<String> = None;
    let mut finals_seen = 0usize;
    let mut nets_seen = 0usize;

    loop {
        let ev = reader.read_event_into(&mut buf).map_err(|e| Error::Format(format!("PNML: {e}")))?;
        match ev {
            XmlEvent::Start(ref s) | XmlEvent::Empty(ref s) => {
                let is_empty = matches!(ev, XmlEvent::Empty(_));
                let name = String::from_utf8_lossy(s.local_name().as_ref()).into_owned();
                let parent = path.last().map(String::as_str);
                let in_first_net = nets_seen == 1 && path.iter().any(|p| p == "net");
                match (parent, name.as_str()) {
                    (Some("pnml"), "net") => nets_seen += 1,
                    (_, "place") if in_first_net && !path.iter().any(|p| p == "finalmarkings") => {
                        places.push(RawPlace {
                            id: attr(s, b"id")?.ok_or_else(|| Error::Format("place without id".into()))?,
                            ..Default::default()
                        });
                    }
                    (Some("marking"), "place") if in_first_net && finals_seen == 1 => {
                        final_idref = attr(s, b"idref")?;
                    }
                    (_, "marking") if in_first_net && parent == Some("finalmarkings") => {
                        finals_seen += 1;
                    }
                    (_, "transition") if in_first_net => {
                        transitions.push(RawTransition {
                            id: attr(s, b"id")?
                                .ok_or_else(|| Error::Format("transition without id".into()))?,
                            ..Default::default()
                        });
                    }
                    (Some("transition"), "toolspecific") if in_first_net => {
                        if attr(s, b"activity")?.as_deref() == Some(INVISIBLE) {
                            if let Some(t) = transitions.last_mut() {
                                t.invisible = true;
                            }
                        }
                    }
                    (_, "arc") if in_first_net => {
                        let source = attr(s, b"source")?.ok_or_else(|| Error::Format("arc without source".into()))?;
                        let target = attr(s, b"target")?.ok_or_else(|| Error::Format("arc without target".into()))?;
                        arcs.push((source, target));
                    }
                    _ => {}
                }
                if !is_empty {
                    path.push(name);
                }
            }
            XmlEvent::Text(t) => {
                let text = t
                    .unescape()
                    .map_err(|e| Error::Format(format!("PNML text: {e}")))?
                    .into_owned();
                let tail: Vec<&str> = path.iter().rev().take(4).map(String::as_str).collect();
                let in_first_net = nets_seen == 1;
                match tail.as_slice() {
                    ["text", "name", "place", ..] if in_first_net => {
                        if let Some(p) = places.last_mut() {
                            p.name = Some(text);
                        }
                    }
                    ["text", "initialMarking", "place", ..] if in_first_net => {
                        if let Some(p) = places.last_mut() {
                            p.tokens = parse_count(&text)?;
                        }
                    }
                    ["text", "inscription", "arc", ..] => {
                        if parse_count(&text)? != 1 {
                            return Err(Error::Format("weighted arcs are not supported".into()));
                        }
                    }
                    ["text", "name", "transition", ..] if in_first_net => {
                        if let Some(t) = transitions.last_mut() {
                            t.name = Some(text);
                        }
                    }
                    ["text", "place", "marking", "finalmarkings"] if in_first_net && finals_seen == 1 => {
                        if let Some(idref) = final_idref.take() {
                            final_tokens.push((idref, parse_count(&text)?));
                        }
                    }
                    _ => {}
                }
            }
            XmlEvent::End(_) => {
                path.pop();
            }
            XmlEvent::Eof => break,
            _ => {}
        }
        buf.clear();
    }

    if nets_seen == 0 {
        return Err(Error::Format("PNML document contains no <net>".into()));
    }

    let mut net = LabeledPetriNet::new();
    let mut place_ids: HashMap<String, PlaceId> = HashMap::new();
    for p in &places {
        let id = net.add_place(p.name.clone().unwrap_or_else(|| p.id.clone()));
        if place_ids.insert(p.id.clone(), id).is_some() {
            return Err(Error::Format(format!("duplicate place id {}", p.id)));
        }
    }
    let mut transition_ids: HashMap<String, TransitionId> = HashMap::new();
    for t in &transitions {
        let name = t.name.clone().unwrap_or_else(|| t.id.clone());
        let label = match (&t.name, t.invisible) {
            (Some(n), false) if !n.is_empty() => Some(Activity::new(n)),
            _ => None,
        };
        let id = net.add_transition(name, label);
        if place_ids.contains_key(&t.id) || transition_ids.insert(t.id.clone(), id).is_some() {
            return Err(Error::Format(format!("duplicate node id {}", t.id)));
        }
    }
    for (source, target) in arcs {
        match (
            place_ids.get(&source),
            transition_ids.get(&source),
            place_ids.get(&target),
            transition_ids.get(&target),
        ) {
            (Some(&p), None, None, Some(&t)) => net.add_input(t, p),
            (None, Some(&t), Some(&p), None) => net.add_output(t, p),
            _ => {
                return Err(Error::Format(format!(
                    "arc {source} -> {target} must connect a place and a transition"
                )))
            }
        }
    }

    let n = net.place_count();
    let mut initial = Marking::empty(n);
    for p in &places {
        initial.set(place_ids[&p.id], p.tokens);
    }
    let mut final_marking = Marking::empty(n);
    for (idref, tokens) in final_tokens {
        let p = place_ids
            .get(&idref)
            .ok_or_else(|| Error::Format(format!("final marking references unknown place {idref}")))?;
        final_marking.set(*p, tokens);
    }
    AcceptingPetriNet::new(net, initial, final_marking)
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::n1;
    use super::super::SearchLimits;
    use super::*;

    #[test]
    fn round_trip_preserves_structure_and_language() {
        let n = n1();
        let text = write_pnml(&n, "N1");
        let back = read_pnml(text.as_bytes()).unwrap();
        assert_eq!(back.net().place_count(), 5);
        assert_eq!(back.net().transition_count(), 6);
        assert_eq!(back.net().arcs(), n.net().arcs());
        assert_eq!(back.initial(), n.initial());
        assert_eq!(back.final_marking(), n.final_marking());
        let lim = SearchLimits::default();
        assert_eq!(back.language_upto(4, &lim).unwrap(), n.language_upto(4, &lim).unwrap());
        let tau = back.transition_named("tau2").unwrap();
        assert!(back.net().transition(tau).is_silent());
    }

    #[test]
    fn annotations_are_emitted() {
        let n = n1();
        let mut ann = Annotations::new();
        ann.insert(TransitionId(5), vec![("pattern".into(), "H".into()), ("role".into(), "complete".into())]);
        let text = write_pnml_annotated(&n, "N1", &ann);
        assert!(text.contains(r#"tool="evabs" pattern="H" role="complete""#));
        assert!(read_pnml(text.as_bytes()).is_ok());
    }

    #[test]
    fn reads_prom_style_document() {
        let doc = r#"<?xml version="1.0"?>
<pnml><net id="n" type="http://www.pnml.org/version-2009/grammar/pnmlcoremodel">
 <page id="pg">
  <place id="src"><name><text>source</text></name><initialMarking><text>1</text></initialMarking></place>
  <place id="snk"><name><text>sink</text></name></place>
  <transition id="ta"><name><text>a</text></name></transition>
  <transition id="tt"><name><text>tau</text></name><toolspecific tool="ProM" version="6.4" activity="$invisible$" localNodeID="x"/></transition>
  <arc id="1" source="src" target="ta"><inscription><text>1</text></inscription></arc>
  <arc id="2" source="ta" target="snk"/>
  <arc id="3" source="src" target="tt"/>
  <arc id="4" source="tt" target="snk"/>
 </page>
 <finalmarkings><marking><place idref="snk"><text>1</text></place></marking></finalmarkings>
</net></pnml>"#;
        let apn = read_pnml(doc.as_bytes()).unwrap();
        let lang = apn.language_upto(2, &SearchLimits::default()).unwrap();
        assert_eq!(lang.len(), 2); // ⟨⟩ and ⟨a⟩
    }

    #[test]
    fn rejects_arc_between_places() {
        let doc = r#"<pnml><net id="n"><page id="p">
            <place id="a"/><place id="b"/><arc id="x" source="a" target="b"/>
            </page></net></pnml>"#;
        assert!(read_pnml(doc.as_bytes()).is_err());
    }

    #[test]
    fn rejects_weighted_arcs() {
        let doc = r#"<pnml><net id="n"><page id="p">
            <place id="a"/><transition id="t"/>
            <arc id="x" source="a" target="t"><inscription><text>2</text></inscription></arc>
            </page></net></pnml>"#;
        assert!(read_pnml(doc.as_bytes()).is_err());
    }
}

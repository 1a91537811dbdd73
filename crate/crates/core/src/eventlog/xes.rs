//! Reading and writing a pragmatic subset of XES.
//!
//! Only trace and event level attributes are kept. `concept:name`,
//! `lifecycle:transition` and `time:timestamp` map onto the event fields;
//! every other attribute is stored as text regardless of its XES type.
//! Log-level attributes, globals, classifiers and nested attribute children
//! are skipped.

use std::collections::BTreeMap;
use std::io::Write;

use chrono::{DateTime, SecondsFormat};
use quick_xml::events::{BytesDecl, BytesEnd, BytesStart, Event as XmlEvent};
use quick_xml::{Reader, Writer};

use super::{Activity, Event, EventLog, Lifecycle, Trace};
use crate::{Error, Result};

const CONCEPT_NAME: &str = "concept:name";
const LIFECYCLE: &str = "lifecycle:transition";
const TIMESTAMP: &str = "time:timestamp";

const ATTRIBUTE_TAGS: &[&str] = &[
    "string", "date", "int", "float", "boolean", "id", "list", "container",
];

#[derive(Clone, Copy, PartialEq, Eq)]
enum Frame {
    Log,
    Trace,
    Event,
    Skipped,
}

#[derive(Default)]
struct PendingEvent {
    activity: Option<String>,
    lifecycle_raw: Option<String>,
    timestamp: Option<String>,
    attributes: BTreeMap<String, String>,
}

#[derive(Default)]
struct PendingTrace {
    case_id: Option<String>,
    events: Vec<Event>,
}

fn line_column(doc: &[u8], offset: usize) -> (usize, usize) {
    let offset = offset.min(doc.len());
    let before = &doc[..offset];
    let line = before.iter().filter(|&&b| b == b'\n').count() + 1;
    let column = match before.iter().rposition(|&b| b == b'\n') {
        Some(nl) => offset - nl,
        None => offset + 1,
    };
    (line, column)
}

fn xml_error(doc: &[u8], offset: usize, message: impl ToString) -> Error {
    let (line, column) = line_column(doc, offset);
    Error::Xml {
        line,
        column,
        message: message.to_string(),
    }
}

fn key_value(doc: &[u8], offset: usize, start: &BytesStart<'_>) -> Result<(Option<String>, Option<String>)> {
    let mut key = None;
    let mut value = None;
    for attr in start.attributes() {
        let attr = attr.map_err(|e| xml_error(doc, offset, e))?;
        let text = attr
            .unescape_value()
            .map_err(|e| xml_error(doc, offset, e))?
            .into_owned();
        match attr.key.as_ref() {
            b"key" => key = Some(text),
            b"value" => value = Some(text),
            _ => {}
        }
    }
    Ok((key, value))
}

/// Parses an XES document into an event log.
pub fn parse_xes(document: &[u8]) -> Result<EventLog> {
    let mut reader = Reader::from_reader(document);
    reader.config_mut().trim_text(true);

    let mut buf = Vec::new();
    let mut stack: Vec<Frame> = Vec::new();
    let mut traces: Vec<Trace> = Vec::new();
    let mut trace: Option<PendingTrace> = None;
    let mut event: Option<PendingEvent> = None;
    let mut seen_log = false;

    loop {
        let offset = reader.buffer_position() as usize;
        let xml_event = reader
            .read_event_into(&mut buf)
            .map_err(|e| xml_error(document, reader.error_position() as usize, e))?;
        let (start, is_empty) = match &xml_event {
            XmlEvent::Start(s) => (Some(s.clone()), false),
            XmlEvent::Empty(s) => (Some(s.clone()), true),
            XmlEvent::End(_) => {
                let frame = stack
                    .pop()
                    .ok_or_else(|| xml_error(document, offset, "unbalanced end tag"))?;
                match frame {
                    Frame::Event => {
                        let t = trace.as_mut().expect("event frames sit inside traces");
                        let pending = event.take().expect("event frame has pending event");
                        let e = finish_event(pending, traces.len(), t.events.len())?;
                        t.events.push(e);
                    }
                    Frame::Trace => {
                        let pending = trace.take().expect("trace frame has pending trace");
                        traces.push(finish_trace(pending, traces.len()));
                    }
                    Frame::Log | Frame::Skipped => {}
                }
                (None, false)
            }
            XmlEvent::Eof => break,
            _ => (None, false),
        };

        let Some(start) = start else {
            buf.clear();
            continue;
        };
        let local = start.local_name();
        let name = std::str::from_utf8(local.as_ref()).unwrap_or("");
        let parent = stack.last().copied();

        let frame = match (parent, name) {
            (None, "log") => {
                seen_log = true;
                Frame::Log
            }
            (None, other) => {
                return Err(Error::Format(format!(
                    "expected a top-level <log> element, found <{other}>"
                )))
            }
            (Some(Frame::Log), "trace") => {
                trace = Some(PendingTrace::default());
                Frame::Trace
            }
            (Some(Frame::Trace), "event") => {
                event = Some(PendingEvent::default());
                Frame::Event
            }
            (Some(Frame::Trace), tag) if ATTRIBUTE_TAGS.contains(&tag) => {
                let (key, value) = key_value(document, offset, &start)?;
                if key.as_deref() == Some(CONCEPT_NAME) {
                    if let Some(t) = trace.as_mut() {
                        t.case_id = value;
                    }
                }
                Frame::Skipped
            }
            (Some(Frame::Event), tag) if ATTRIBUTE_TAGS.contains(&tag) => {
                let (key, value) = key_value(document, offset, &start)?;
                let pending = event.as_mut().expect("event frame has pending event");
                if let (Some(key), Some(value)) = (key, value) {
                    match key.as_str() {
                        CONCEPT_NAME => pending.activity = Some(value),
                        LIFECYCLE => pending.lifecycle_raw = Some(value),
                        TIMESTAMP => pending.timestamp = Some(value),
                        _ => {
                            pending.attributes.insert(key, value);
                        }
                    }
                }
                Frame::Skipped
            }
            _ => Frame::Skipped,
        };

        if is_empty {
            match frame {
                Frame::Trace => {
                    let pending = trace.take().expect("just created");
                    traces.push(finish_trace(pending, traces.len()));
                }
                Frame::Event => {
                    let t = trace.as_mut().expect("event inside trace");
                    let pending = event.take().expect("just created");
                    let e = finish_event(pending, traces.len(), t.events.len())?;
                    t.events.push(e);
                }
                _ => {}
            }
        } else {
            stack.push(frame);
        }
        buf.clear();
    }

    if !stack.is_empty() {
        return Err(xml_error(document, document.len(), "unexpected end of document"));
    }
    if !seen_log {
        return Err(Error::Format("document has no <log> element".into()));
    }
    Ok(EventLog::new(traces))
}

fn finish_trace(pending: PendingTrace, index: usize) -> Trace {
    Trace {
        case_id: pending.case_id.unwrap_or_else(|| (index + 1).to_string()),
        events: pending.events,
    }
}

fn finish_event(mut pending: PendingEvent, trace: usize, event: usize) -> Result<Event> {
    let activity = match pending.activity.take() {
        Some(name) if !name.is_empty() => Activity::new(name),
        _ => return Err(Error::MissingActivity { trace, event }),
    };
    let mut lifecycle = None;
    if let Some(raw) = pending.lifecycle_raw.take() {
        lifecycle = Lifecycle::parse(&raw);
        if lifecycle.is_none() {
            pending.attributes.insert(LIFECYCLE.to_string(), raw);
        }
    }
    let timestamp = match pending.timestamp.take() {
        Some(raw) => Some(DateTime::parse_from_rfc3339(&raw).map_err(|e| {
            Error::Format(format!(
                "trace {trace}, event {event}: bad time:timestamp {raw:?}: {e}"
            ))
        })?),
        None => None,
    };
    Ok(Event {
        activity,
        lifecycle,
        timestamp,
        attributes: pending.attributes,
    })
}

/// Serializes a log as an XES document.
pub fn write_xes(log: &EventLog) -> Vec<u8> {
    let mut out = Vec::new();
    write_xes_to(log, &mut out).expect("writing to a Vec cannot fail");
    out
}

pub fn write_xes_to<W: Write>(log: &EventLog, sink: W) -> std::io::Result<()> {
    let mut w = Writer::new_with_indent(sink, b' ', 2);
    w.write_event(XmlEvent::Decl(BytesDecl::new("1.0", Some("UTF-8"), None)))?;
    w.write_event(XmlEvent::Start(BytesStart::new("log").with_attributes([
        ("xes.version", "1.0"),
        ("xes.features", ""),
        ("xmlns", "http://www.xes-standard.org/"),
    ])))?;
    for (name, prefix) in [
        ("Concept", "concept"),
        ("Lifecycle", "lifecycle"),
        ("Time", "time"),
    ] {
        let uri = format!("http://www.xes-standard.org/{prefix}.xesext");
        w.write_event(XmlEvent::Empty(BytesStart::new("extension").with_attributes([
            ("name", name),
            ("prefix", prefix),
            ("uri", uri.as_str()),
        ])))?;
    }
    for trace in &log.traces {
        w.write_event(XmlEvent::Start(BytesStart::new("trace")))?;
        attribute(&mut w, "string", CONCEPT_NAME, &trace.case_id)?;
        for event in &trace.events {
            w.write_event(XmlEvent::Start(BytesStart::new("event")))?;
            attribute(&mut w, "string", CONCEPT_NAME, event.activity.label())?;
            if let Some(lc) = event.lifecycle {
                attribute(&mut w, "string", LIFECYCLE, lc.as_str())?;
            }
            if let Some(ts) = event.timestamp {
                let text = ts.to_rfc3339_opts(SecondsFormat::AutoSi, false);
                attribute(&mut w, "date", TIMESTAMP, &text)?;
            }
            for (k, v) in &event.attributes {
                attribute(&mut w, "string", k, v)?;
            }
            w.write_event(XmlEvent::End(BytesEnd::new("event")))?;
        }
        w.write_event(XmlEvent::End(BytesEnd::new("trace")))?;
    }
    w.write_event(XmlEvent::End(BytesEnd::new("log")))?;
    w.into_inner().write_all(b"\n")
}

fn attribute<W: Write>(w: &mut Writer<W>, tag: &str, key: &str, value: &str) -> std::io::Result<()> {
    w.write_event(XmlEvent::Empty(
        BytesStart::new(tag).with_attributes([("key", key), ("value", value)]),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SIMPLE: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<log xes.version="1.0">
  <string key="concept:name" value="log name"/>
  <global scope="event">
    <string key="concept:name" value="__INVALID__"/>
  </global>
  <trace>
    <string key="concept:name" value="case-1"/>
    <event>
      <string key="concept:name" value="a"/>
      <string key="lifecycle:transition" value="start"/>
      <date key="time:timestamp" value="2016-01-01T10:00:00.000+01:00"/>
      <string key="org:resource" value="Pete"/>
    </event>
    <event>
      <string key="concept:name" value="b"/>
      <int key="cost" value="12"/>
    </event>
    <event><string key="concept:name" value="c"/></event>
  </trace>
  <trace/>
</log>"#;

    #[test]
    fn parses_simple_document() {
        let log = parse_xes(SIMPLE.as_bytes()).unwrap();
        assert_eq!(log.len(), 2);
        let t = &log.traces[0];
        assert_eq!(t.case_id, "case-1");
        let acts: Vec<_> = t.activities().map(Activity::label).collect();
        assert_eq!(acts, ["a", "b", "c"]);
        assert_eq!(t.events[0].lifecycle, Some(Lifecycle::Start));
        assert!(t.events[0].timestamp.is_some());
        assert_eq!(t.events[0].attributes["org:resource"], "Pete");
        assert_eq!(t.events[1].attributes["cost"], "12");
        assert_eq!(t.events[1].lifecycle, None);
        assert!(log.traces[1].is_empty());
    }

    #[test]
    fn missing_concept_name_names_the_trace() {
        let doc = r#"<log><trace><event><string key="concept:name" value="a"/></event></trace>
            <trace><event><string key="x" value="y"/></event></trace></log>"#;
        match parse_xes(doc.as_bytes()) {
            Err(Error::MissingActivity { trace, event }) => {
                assert_eq!((trace, event), (1, 0));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_xml_reports_position() {
        let doc = "<log>\n  <trace>\n    <event></trace>\n</log>";
        match parse_xes(doc.as_bytes()) {
            Err(Error::Xml { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_log_root_rejected() {
        assert!(matches!(
            parse_xes(b"<pnml></pnml>"),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn unknown_lifecycle_values_kept_as_attribute() {
        let doc = r#"<log><trace><event><string key="concept:name" value="a"/>
            <string key="lifecycle:transition" value="suspend"/></event></trace></log>"#;
        let log = parse_xes(doc.as_bytes()).unwrap();
        let e = &log.traces[0].events[0];
        assert_eq!(e.lifecycle, None);
        assert_eq!(e.attributes[LIFECYCLE], "suspend");
    }

    #[test]
    fn round_trip_is_identity() {
        let log = parse_xes(SIMPLE.as_bytes()).unwrap();
        let again = parse_xes(&write_xes(&log)).unwrap();
        assert_eq!(log, again);
    }

    #[test]
    fn writes_lifecycle_of_high_level_events() {
        let log = EventLog::new(vec![Trace::new(
            "1",
            vec![
                Event::new("LPM_1").with_lifecycle(Lifecycle::Start),
                Event::new("x"),
                Event::new("LPM_1").with_lifecycle(Lifecycle::Complete),
            ],
        )]);
        let doc = write_xes(&log);
        let text = String::from_utf8(doc.clone()).unwrap();
        assert!(text.contains(r#"key="lifecycle:transition" value="start""#));
        assert_eq!(parse_xes(&doc).unwrap(), log);
    }

    #[test]
    fn escapes_special_characters() {
        let log = EventLog::from_label_traces([vec!["a<b", "\"q\" & r"]]);
        assert_eq!(parse_xes(&write_xes(&log)).unwrap(), log);
    }
}

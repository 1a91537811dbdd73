use std::collections::{BTreeMap, HashMap};

use chrono::{DateTime, FixedOffset, NaiveDateTime, TimeZone, Utc};

use super::{Activity, Event, EventLog, Trace};
use crate::{Error, Result};

/// Column names used to read a CSV event log.
#[derive(Clone, Debug)]
pub struct CsvColumns {
    pub case: String,
    pub activity: String,
    pub time: Option<String>,
}

impl CsvColumns {
    pub fn new(case: impl Into<String>, activity: impl Into<String>) -> Self {
        CsvColumns {
            case: case.into(),
            activity: activity.into(),
            time: None,
        }
    }

    pub fn with_time(mut self, time: impl Into<String>) -> Self {
        self.time = Some(time.into());
        self
    }
}

fn parse_timestamp(raw: &str) -> Option<DateTime<FixedOffset>> {
    let raw = raw.trim();
    if let Ok(ts) = DateTime::parse_from_rfc3339(raw) {
        return Some(ts);
    }
    for format in ["%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M:%S%.f", "%Y/%m/%d %H:%M:%S%.f"] {
        if let Ok(naive) = NaiveDateTime::parse_from_str(raw, format) {
            return Some(Utc.from_utc_datetime(&naive).fixed_offset());
        }
    }
    None
}

/// Reads a CSV log with a header row. Rows are grouped by case in order of
/// first appearance. Within a case, events are sorted by timestamp when a
/// time column is configured (stable, so ties keep row order). Columns other
/// than the configured ones become event attributes.
pub fn parse_csv(document: &[u8], columns: &CsvColumns) -> Result<EventLog> {
    let mut reader = ::csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(document);
    let headers = reader
        .headers()
        .map_err(|e| Error::CsvConfig(e.to_string()))?
        .clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::CsvConfig(format!("missing column {name:?}")))
    };
    let case_idx = find(&columns.case)?;
    let activity_idx = find(&columns.activity)?;
    let time_idx = columns.time.as_deref().map(find).transpose()?;

    let mut case_order: Vec<String> = Vec::new();
    let mut cases: HashMap<String, Vec<Event>> = HashMap::new();

    for row in reader.records() {
        let row = row.map_err(|e| Error::CsvRow {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| {
            row.get(i).ok_or_else(|| Error::CsvRow {
                line,
                message: format!("row has no field {i}"),
            })
        };
        let case = field(case_idx)?.to_string();
        let label = field(activity_idx)?.trim();
        if label.is_empty() {
            return Err(Error::CsvRow {
                line,
                message: "empty activity".into(),
            });
        }
        let mut event = Event::new(Activity::new(label));
        if let Some(ti) = time_idx {
            let raw = field(ti)?;
            let ts = parse_timestamp(raw).ok_or_else(|| Error::CsvRow {
                line,
                message: format!("unparseable timestamp {raw:?}"),
            })?;
            event.timestamp = Some(ts);
        }
        let mut attributes = BTreeMap::new();
        for (i, (h, v)) in headers.iter().zip(row.iter()).enumerate() {
            if i != case_idx && i != activity_idx && Some(i) != time_idx {
                attributes.insert(h.to_string(), v.to_string());
            }
        }
        event.attributes = attributes;
        if !cases.contains_key(&case) {
            case_order.push(case.clone());
        }
        cases.entry(case).or_default().push(event);
    }

    let traces = case_order
        .into_iter()
        .map(|case| {
            let mut events = cases.remove(&case).unwrap_or_default();
            if time_idx.is_some() {
                events.sort_by_key(|e| e.timestamp);
            }
            Trace::new(case, events)
        })
        .collect();
    Ok(EventLog::new(traces))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(log: &EventLog) -> Vec<Vec<String>> {
        log.traces
            .iter()
            .map(|t| t.activities().map(|a| a.label().to_string()).collect())
            .collect()
    }

    #[test]
    fn groups_rows_by_case() {
        let doc = "case,activity\nc1,a\nc1,b\nc2,a\n";
        let log = parse_csv(doc.as_bytes(), &CsvColumns::new("case", "activity")).unwrap();
        assert_eq!(labels(&log), vec![vec!["a", "b"], vec!["a"]]);
        assert_eq!(log.traces[1].case_id, "c2");
    }

    #[test]
    fn sorts_by_timestamp_with_stable_ties() {
        let doc = "case,act,time,res\n\
                   c1,b,2020-01-01 10:00:00,r1\n\
                   c1,a,2020-01-01 09:00:00,r2\n\
                   c1,c,2020-01-01 10:00:00,r3\n\
                   c2,x,2020-01-02T08:00:00+02:00,r4\n";
        let cols = CsvColumns::new("case", "act").with_time("time");
        let log = parse_csv(doc.as_bytes(), &cols).unwrap();
        assert_eq!(labels(&log), vec![vec!["a", "b", "c"], vec!["x"]]);
        assert_eq!(log.traces[0].events[0].attributes["res"], "r2");
    }

    #[test]
    fn missing_time_column_is_configuration_error() {
        let doc = "case,act\nc1,a\n";
        let cols = CsvColumns::new("case", "act").with_time("time");
        assert!(matches!(
            parse_csv(doc.as_bytes(), &cols),
            Err(Error::CsvConfig(_))
        ));
    }

    #[test]
    fn bad_timestamp_reports_line() {
        let doc = "case,act,time\nc1,a,2020-01-01 10:00:00\nc1,b,yesterday\n";
        let cols = CsvColumns::new("case", "act").with_time("time");
        match parse_csv(doc.as_bytes(), &cols) {
            Err(Error::CsvRow { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}

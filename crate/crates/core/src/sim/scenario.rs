use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::controllers::ControllerParams;
use crate::plant::{Mode, PlantParams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// Adds `value` W to the active power reference.
    ReferenceStep,
    /// Adds `value` W to the PCC load.
    LoadStep,
    /// Opens the grid switch.
    Island,
    /// Closes the grid switch.
    Reconnect,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Event {
    /// s
    pub time: f64,
    pub kind: EventKind,
    /// W for reference and load steps; unused otherwise.
    #[serde(default)]
    pub value: f64,
}

/// A single-inverter experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub mode: Mode,
    pub controller: ControllerParams,
    pub plant: PlantParams,
    pub events: Vec<Event>,
    pub t_end: f64,
    pub dt: f64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", "must be finite and > 0"));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::param("t_end", "must be finite and > 0"));
        }
        if self.dt > self.t_end {
            return Err(Error::param("dt", "must not exceed t_end"));
        }
        self.controller.validate()?;
        self.plant.validate()?;
        for tau in self.controller.filter_time_constants() {
            if self.dt > tau / 10.0 {
                return Err(Error::param(
                    "dt",
                    format!("must be <= tau/10 = {} s for filter time constant {tau} s", tau / 10.0),
                ));
            }
        }
        let mut last = 0.0;
        for (i, e) in self.events.iter().enumerate() {
            if !(e.time >= 0.0 && e.time <= self.t_end) {
                return Err(Error::param(format!("events[{i}].time"), "must lie in [0, t_end]"));
            }
            if e.time < last {
                return Err(Error::param(format!("events[{i}].time"), "events must be sorted by time"));
            }
            if !e.value.is_finite() {
                return Err(Error::param(format!("events[{i}].value"), "must be finite"));
            }
            last = e.time;
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    /// Integration step at which an event takes effect.
    pub fn event_step(&self, e: &Event) -> usize {
        (e.time / self.dt).round() as usize
    }
}

pub const TRACE_HEADER: &str = "t,omega,freq,v,p,q,theta,p_ref_effective,p_load_effective";

/// Sampled simulation output, one row per step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub dt: f64,
    pub t: Vec<f64>,
    /// rad/s
    pub omega: Vec<f64>,
    /// Hz
    pub freq: Vec<f64>,
    pub v: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub theta: Vec<f64>,
    pub p_ref_effective: Vec<f64>,
    pub p_load_effective: Vec<f64>,
}

impl Trace {
    pub(crate) fn with_capacity(dt: f64, n: usize) -> Self {
        let v = || Vec::with_capacity(n);
        Self {
            dt,
            t: v(),
            omega: v(),
            freq: v(),
            v: v(),
            p: v(),
            q: v(),
            theta: v(),
            p_ref_effective: v(),
            p_load_effective: v(),
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn columns(&self) -> [(&'static str, &[f64]); 9] {
        [
            ("t", &self.t),
            ("omega", &self.omega),
            ("freq", &self.freq),
            ("v", &self.v),
            ("p", &self.p),
            ("q", &self.q),
            ("theta", &self.theta),
            ("p_ref_effective", &self.p_ref_effective),
            ("p_load_effective", &self.p_load_effective),
        ]
    }

    /// Column by header name.
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns().into_iter().find(|(n, _)| *n == name).map(|(_, c)| c)
    }

    fn render(&self, digits: usize, sep: &str, header: &str) -> String {
        let cols = self.columns();
        let mut out = String::with_capacity(self.len() * 9 * (digits + 8));
        out.push_str(header);
        out.push('\n');
        for i in 0..self.len() {
            for (j, (_, c)) in cols.iter().enumerate() {
                if j > 0 {
                    out.push_str(sep);
                }
                out.push_str(&format_sig(c[i], digits));
            }
            out.push('\n');
        }
        out
    }

    /// CSV with the fixed header and `digits` significant digits.
    pub fn to_csv(&self, digits: usize) -> String {
        self.render(digits, ",", TRACE_HEADER)
    }

    /// Whitespace-separated columns with a `#` header, for gnuplot.
    pub fn to_dat(&self, digits: usize) -> String {
        let header = format!("# {}", TRACE_HEADER.replace(',', " "));
        self.render(digits, " ", &header)
    }
}

/// Formats `x` with `digits` significant digits, like C's `%.{digits}g`.
pub fn format_sig(x: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if x == 0.0 {
        return "0".to_owned();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        let m = trim_zeros(mantissa);
        let mut s = String::new();
        let _ = write!(s, "{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs());
        s
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_owned()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controllers::DroopParams;

    fn scenario() -> Scenario {
        Scenario {
            mode: Mode::Gc,
            controller: ControllerParams::Droop(DroopParams::default()),
            plant: PlantParams::nameplate(),
            events: vec![Event {
                time: 1.0,
                kind: EventKind::ReferenceStep,
                value: 12_000.0,
            }],
            t_end: 2.0,
            dt: 1e-4,
        }
    }

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(format_sig(314.159265358979, 9), "314.159265");
        assert_eq!(format_sig(0.0, 9), "0");
        assert_eq!(format_sig(1.0, 9), "1");
        assert_eq!(format_sig(-2.5e-7, 9), "-2.5e-07");
        assert_eq!(format_sig(123456789012.0, 9), "1.23456789e+11");
        assert_eq!(format_sig(0.000123456789123, 9), "0.000123456789");
        assert_eq!(format_sig(99999.99999999, 3), "1e+05");
    }

    #[test]
    fn validation_messages_name_fields() {
        let mut sc = scenario();
        sc.dt = 0.0;
        assert!(matches!(sc.validate(), Err(Error::InvalidParameter { field, .. }) if field == "dt"));
        let mut sc = scenario();
        sc.dt = 0.01;
        assert!(matches!(sc.validate(), Err(Error::InvalidParameter { field, .. }) if field == "dt"));
        let mut sc = scenario();
        sc.events[0].time = 3.0;
        assert!(
            matches!(sc.validate(), Err(Error::InvalidParameter { field, .. }) if field == "events[0].time")
        );
        assert!(scenario().validate().is_ok());
    }

    #[test]
    fn csv_layout() {
        let mut tr = Trace::with_capacity(0.5, 2);
        for k in 0..2 {
            for (i, c) in [
                &mut tr.t,
                &mut tr.omega,
                &mut tr.freq,
                &mut tr.v,
                &mut tr.p,
                &mut tr.q,
                &mut tr.theta,
                &mut tr.p_ref_effective,
                &mut tr.p_load_effective,
            ]
            .into_iter()
            .enumerate()
            {
                c.push((k * 10 + i) as f64);
            }
        }
        let csv = tr.to_csv(9);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(TRACE_HEADER));
        assert_eq!(lines.next(), Some("0,1,2,3,4,5,6,7,8"));
        assert_eq!(lines.next(), Some("10,11,12,13,14,15,16,17,18"));
        assert!(tr.to_dat(9).starts_with("# t omega freq"));
        assert_eq!(tr.column("theta"), Some(&[6.0, 16.0][..]));
    }

    #[test]
    fn event_serde() {
        let e: Event = serde_json::from_str(r#"{"time":1,"kind":"load_step","value":1000}"#).unwrap();
        assert_eq!(e.kind, EventKind::LoadStep);
        let e: Event = serde_json::from_str(r#"{"time":2,"kind":"island"}"#).unwrap();
        assert_eq!(e.value, 0.0);
        assert!(serde_json::from_str::<Event>(r#"{"time":2,"kind":"trip"}"#).is_err());
    }
}

//! Month-day anchors on a non-leap calendar.

use crate::error::{Error, Result};

const MONTH_DAYS: [u32; 12] = [31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct MonthDay {
    pub month: u32,
    pub day: u32,
}

impl MonthDay {
    /// Parses `MM-DD`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("expected a MM-DD date, got {s:?}"));
        let (m, d) = s.trim().split_once('-').ok_or_else(bad)?;
        if m.len() != 2 || d.len() != 2 {
            return Err(bad());
        }
        let month: u32 = m.parse().map_err(|_| bad())?;
        let day: u32 = d.parse().map_err(|_| bad())?;
        if !(1..=12).contains(&month) || day == 0 || day > MONTH_DAYS[month as usize - 1] {
            return Err(bad());
        }
        Ok(MonthDay { month, day })
    }

    /// Zero-based day of the year.
    pub fn ordinal(self) -> u32 {
        MONTH_DAYS[..self.month as usize - 1].iter().sum::<u32>() + self.day - 1
    }
}

impl std::fmt::Display for MonthDay {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:02}-{:02}", self.month, self.day)
    }
}

/// A season from the start of `start` to the end of `end`, inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeasonWindow {
    pub start: MonthDay,
    pub end: MonthDay,
}

impl SeasonWindow {
    pub fn parse(start: &str, end: &str) -> Result<Self> {
        let w = SeasonWindow {
            start: MonthDay::parse(start)?,
            end: MonthDay::parse(end)?,
        };
        if w.end < w.start {
            return Err(Error::Config(format!(
                "season end {} precedes season start {}",
                w.end, w.start
            )));
        }
        Ok(w)
    }

    /// Season length T in days.
    pub fn length_days(&self) -> u32 {
        self.end.ordinal() - self.start.ordinal() + 1
    }

    /// Day-of-season at the start of `md`.
    pub fn day_start(&self, md: MonthDay) -> Result<f64> {
        if md < self.start || md > self.end {
            return Err(Error::Interval {
                t0: md.ordinal() as f64,
                t1: md.ordinal() as f64,
                reason: format!("date {md} lies outside the season {}..{}", self.start, self.end),
            });
        }
        Ok((md.ordinal() - self.start.ordinal()) as f64)
    }

    /// Day-of-season at the end of `md`.
    pub fn day_end(&self, md: MonthDay) -> Result<f64> {
        Ok(self.day_start(md)? + 1.0)
    }

    /// `[start of from, end of to]` in days of season.
    pub fn interval(&self, from: &str, to: &str) -> Result<(f64, f64)> {
        let t0 = self.day_start(MonthDay::parse(from)?)?;
        let t1 = self.day_end(MonthDay::parse(to)?)?;
        if t1 <= t0 {
            return Err(Error::Interval {
                t0,
                t1,
                reason: format!("{from} does not precede {to}"),
            });
        }
        Ok((t0, t1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crop_seasons() {
        assert_eq!(SeasonWindow::parse("04-01", "10-31").unwrap().length_days(), 214);
        assert_eq!(SeasonWindow::parse("02-01", "06-30").unwrap().length_days(), 150);
    }

    #[test]
    fn summer_window_in_maize_season() {
        let s = SeasonWindow::parse("04-01", "10-31").unwrap();
        let (t0, t1) = s.interval("06-01", "08-31").unwrap();
        assert_eq!((t0, t1), (61.0, 153.0));
        assert!(s.interval("03-01", "04-10").is_err());
        assert!(s.interval("06-10", "06-01").is_err());
    }

    #[test]
    fn rejects_malformed_dates() {
        for bad in ["6-01", "02-30", "13-01", "00-10", "ab-cd", "0601"] {
            assert!(MonthDay::parse(bad).is_err(), "{bad}");
        }
        assert_eq!(MonthDay::parse("02-28").unwrap().to_string(), "02-28");
    }
}

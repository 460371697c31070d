use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

/// Extra execution time the emulator adds to each invocation of a function.
#[derive(Debug, Clone, PartialEq)]
pub enum DelaySchedule {
    Fixed(f64),
    Uniform(f64, f64),
    /// Cycles through the list, one entry per invocation in arrival order.
    List(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid delay schedule {0:?}; expected fixed:MS, uniform:LO:HI or list:A,B,...")]
pub struct DelayParseError(pub String);

impl DelaySchedule {
    /// Delay in milliseconds for the `index`-th invocation since the schedule was set.
    pub fn delay_ms(&self, index: u64) -> f64 {
        match self {
            DelaySchedule::Fixed(ms) => *ms,
            DelaySchedule::Uniform(lo, hi) if hi > lo => rand::rng().random_range(*lo..*hi),
            DelaySchedule::Uniform(lo, _) => *lo,
            DelaySchedule::List(items) => items[(index % items.len() as u64) as usize],
        }
    }
}

impl FromStr for DelaySchedule {
    type Err = DelayParseError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let err = || DelayParseError(text.to_owned());
        let number = |s: &str| -> Result<f64, DelayParseError> {
            let v: f64 = s.trim().parse().map_err(|_| err())?;
            if v.is_finite() && v >= 0.0 {
                Ok(v)
            } else {
                Err(err())
            }
        };
        let (kind, rest) = text.split_once(':').ok_or_else(err)?;
        match kind {
            "fixed" => Ok(DelaySchedule::Fixed(number(rest)?)),
            "uniform" => {
                let (lo, hi) = rest.split_once(':').ok_or_else(err)?;
                let (lo, hi) = (number(lo)?, number(hi)?);
                if lo > hi {
                    return Err(err());
                }
                Ok(DelaySchedule::Uniform(lo, hi))
            }
            "list" => {
                let items = rest.split(',').map(number).collect::<Result<Vec<_>, _>>()?;
                if items.is_empty() {
                    return Err(err());
                }
                Ok(DelaySchedule::List(items))
            }
            _ => Err(err()),
        }
    }
}

impl fmt::Display for DelaySchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DelaySchedule::Fixed(ms) => write!(f, "fixed:{ms}"),
            DelaySchedule::Uniform(lo, hi) => write!(f, "uniform:{lo}:{hi}"),
            DelaySchedule::List(items) => {
                let parts: Vec<String> = items.iter().map(f64::to_string).collect();
                write!(f, "list:{}", parts.join(","))
            }
        }
    }
}

/// Parses a `name=schedule` flag value.
pub fn parse_delay_flag(text: &str) -> Result<(String, DelaySchedule), DelayParseError> {
    let (name, schedule) = text.split_once('=').ok_or_else(|| DelayParseError(text.to_owned()))?;
    if name.is_empty() {
        return Err(DelayParseError(text.to_owned()));
    }
    Ok((name.to_owned(), schedule.parse()?))
}

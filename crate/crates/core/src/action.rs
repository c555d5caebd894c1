//! Generic mouse/keyboard action space and its textual wire encoding.
//!
//! Grammar (one action per line, tokens separated by whitespace):
//!
//! ```text
//! click <x> <y>
//! begin_drag <x> <y>
//! end_drag <x> <y>
//! key [shift|ctrl|alt] <key> [<key> ...]
//! scroll <z>
//! ```
//!
//! Coordinates are bin indices, not pixels. A key name is either a single printable
//! ASCII character or one of `enter`, `tab`, `backspace`, `space`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NAMED_KEYS: [&str; 4] = ["enter", "tab", "backspace", "space"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Modifier {
    Shift,
    Ctrl,
    Alt,
}

impl Modifier {
    pub const ALL: [Modifier; 3] = [Modifier::Shift, Modifier::Ctrl, Modifier::Alt];

    pub fn as_str(self) -> &'static str {
        match self {
            Modifier::Shift => "shift",
            Modifier::Ctrl => "ctrl",
            Modifier::Alt => "alt",
        }
    }
}

impl FromStr for Modifier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shift" => Ok(Modifier::Shift),
            "ctrl" => Ok(Modifier::Ctrl),
            "alt" => Ok(Modifier::Alt),
            other => Err(Error::Grammar(format!("unknown modifier `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Action {
    Click { x: u32, y: u32 },
    BeginDrag { x: u32, y: u32 },
    EndDrag { x: u32, y: u32 },
    Key { modifier: Option<Modifier>, keys: Vec<String> },
    Scroll { z: i32 },
}

impl Action {
    pub fn click(x: u32, y: u32) -> Self {
        Action::Click { x, y }
    }

    /// A single unmodified key press.
    pub fn key(name: &str) -> Self {
        Action::Key { modifier: None, keys: vec![name.to_string()] }
    }

    pub fn verb(&self) -> &'static str {
        match self {
            Action::Click { .. } => "click",
            Action::BeginDrag { .. } => "begin_drag",
            Action::EndDrag { .. } => "end_drag",
            Action::Key { .. } => "key",
            Action::Scroll { .. } => "scroll",
        }
    }

    pub fn coords(&self) -> Option<(u32, u32)> {
        match *self {
            Action::Click { x, y } | Action::BeginDrag { x, y } | Action::EndDrag { x, y } => {
                Some((x, y))
            }
            _ => None,
        }
    }

    /// Canonical text form. Equivalent to `to_string()`.
    pub fn serialize(&self) -> String {
        self.to_string()
    }

    pub fn validate(&self, cfg: &BinConfig) -> Result<()> {
        if let Some((x, y)) = self.coords() {
            if x >= cfg.x_bins {
                return Err(Error::Range(format!("x bin {x} outside 0..{}", cfg.x_bins)));
            }
            if y >= cfg.y_bins {
                return Err(Error::Range(format!("y bin {y} outside 0..{}", cfg.y_bins)));
            }
        }
        match self {
            Action::Key { keys, .. } => {
                if keys.is_empty() {
                    return Err(Error::Grammar("key action needs at least one key".into()));
                }
                for k in keys {
                    if !is_key_name(k) {
                        return Err(Error::Grammar(format!("invalid key name `{k}`")));
                    }
                }
            }
            Action::Scroll { z }
                if z.unsigned_abs() > cfg.scroll_bin_max => {
                    return Err(Error::Range(format!(
                        "scroll {z} exceeds ±{}",
                        cfg.scroll_bin_max
                    )));
                }
            _ => {}
        }
        Ok(())
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Click { x, y } | Action::BeginDrag { x, y } | Action::EndDrag { x, y } => {
                write!(f, "{} {} {}", self.verb(), x, y)
            }
            Action::Key { modifier, keys } => {
                f.write_str("key")?;
                if let Some(m) = modifier {
                    write!(f, " {}", m.as_str())?;
                }
                for k in keys {
                    write!(f, " {k}")?;
                }
                Ok(())
            }
            Action::Scroll { z } => write!(f, "scroll {z}"),
        }
    }
}

/// True for a single printable, non-space ASCII character or a named key.
pub fn is_key_name(name: &str) -> bool {
    let mut chars = name.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => c.is_ascii_graphic(),
        _ => NAMED_KEYS.contains(&name),
    }
}

/// Discretisation of the observation into coordinate bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinConfig {
    pub x_bins: u32,
    pub y_bins: u32,
    pub scroll_bin_max: u32,
    pub width_px: u32,
    pub height_px: u32,
}

impl Default for BinConfig {
    fn default() -> Self {
        BinConfig { x_bins: 32, y_bins: 32, scroll_bin_max: 3, width_px: 160, height_px: 210 }
    }
}

impl BinConfig {
    pub fn validate(&self) -> Result<()> {
        if self.x_bins < 1 || self.y_bins < 1 {
            return Err(Error::Config("bin counts must be at least 1".into()));
        }
        if self.width_px < self.x_bins || self.height_px < self.y_bins {
            return Err(Error::Config("each bin must span at least one pixel".into()));
        }
        Ok(())
    }

    /// Pixel position `(px, py)` in the full observation to bin indices.
    pub fn bin_point(&self, px: u32, py: u32) -> Result<(u32, u32)> {
        Ok((px_to_bin(px, self.width_px, self.x_bins)?, px_to_bin(py, self.height_px, self.y_bins)?))
    }

    /// Bin indices to the pixel at the bin centre.
    pub fn unbin_point(&self, x: u32, y: u32) -> Result<(u32, u32)> {
        Ok((bin_to_px(x, self.width_px, self.x_bins)?, bin_to_px(y, self.height_px, self.y_bins)?))
    }
}

pub fn parse_action(text: &str, cfg: &BinConfig) -> Result<Action> {
    let mut tokens = text.split_whitespace();
    let verb = tokens.next().ok_or_else(|| Error::Grammar("empty action".into()))?;
    let rest: Vec<&str> = tokens.collect();
    let action = match verb {
        "click" | "begin_drag" | "end_drag" => {
            let [xs, ys] = rest[..] else {
                return Err(Error::Grammar(format!(
                    "`{verb}` takes 2 arguments, got {}",
                    rest.len()
                )));
            };
            let x = parse_bin(xs)?;
            let y = parse_bin(ys)?;
            match verb {
                "click" => Action::Click { x, y },
                "begin_drag" => Action::BeginDrag { x, y },
                _ => Action::EndDrag { x, y },
            }
        }
        "key" => {
            let (modifier, keys) = match rest.split_first() {
                None => return Err(Error::Grammar("`key` takes at least 1 argument".into())),
                Some((first, tail)) => match first.parse::<Modifier>() {
                    Ok(m) => (Some(m), tail),
                    Err(_) => (None, &rest[..]),
                },
            };
            if keys.is_empty() {
                return Err(Error::Grammar("`key` needs a key name after the modifier".into()));
            }
            Action::Key { modifier, keys: keys.iter().map(|k| k.to_string()).collect() }
        }
        "scroll" => {
            let [zs] = rest[..] else {
                return Err(Error::Grammar(format!("`scroll` takes 1 argument, got {}", rest.len())));
            };
            let z = zs
                .parse::<i32>()
                .map_err(|_| Error::Grammar(format!("non-integer scroll amount `{zs}`")))?;
            Action::Scroll { z }
        }
        other => return Err(Error::Grammar(format!("unknown verb `{other}`"))),
    };
    action.validate(cfg)?;
    Ok(action)
}

fn parse_bin(tok: &str) -> Result<u32> {
    if let Ok(v) = tok.parse::<i64>() {
        if v < 0 {
            return Err(Error::Range(format!("negative bin {v}")));
        }
        return u32::try_from(v).map_err(|_| Error::Range(format!("bin {v} too large")));
    }
    Err(Error::Grammar(format!("non-integer coordinate `{tok}`")))
}

pub fn serialize_action(a: &Action) -> String {
    a.to_string()
}

/// `floor(px * n_bins / axis_len_px)`, clamped into the last bin.
pub fn px_to_bin(px: u32, axis_len_px: u32, n_bins: u32) -> Result<u32> {
    if px >= axis_len_px {
        return Err(Error::Range(format!("pixel {px} outside 0..{axis_len_px}")));
    }
    let bin = (px as u64 * n_bins as u64 / axis_len_px as u64) as u32;
    Ok(bin.min(n_bins - 1))
}

/// Pixel at the centre of `bin`: `floor((bin + 0.5) * axis_len_px / n_bins)`.
pub fn bin_to_px(bin: u32, axis_len_px: u32, n_bins: u32) -> Result<u32> {
    if bin >= n_bins {
        return Err(Error::Range(format!("bin {bin} outside 0..{n_bins}")));
    }
    // (2b + 1) * len / (2n) in integers avoids float rounding.
    Ok(((2 * bin as u64 + 1) * axis_len_px as u64 / (2 * n_bins as u64)) as u32)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> BinConfig {
        BinConfig::default()
    }

    #[test]
    fn parses_figure_style_click() {
        assert_eq!(parse_action("click 23 12", &cfg()).unwrap(), Action::click(23, 12));
        assert_eq!(parse_action("click 0 0", &cfg()).unwrap(), Action::click(0, 0));
    }

    #[test]
    fn out_of_range_bin() {
        assert!(matches!(parse_action("click 23 99", &cfg()), Err(Error::Range(_))));
        assert!(matches!(parse_action("click 32 0", &cfg()), Err(Error::Range(_))));
        assert!(matches!(parse_action("click -1 0", &cfg()), Err(Error::Range(_))));
        assert!(matches!(parse_action("scroll 4", &cfg()), Err(Error::Range(_))));
    }

    #[test]
    fn grammar_errors() {
        for bad in ["", "tap 1 2", "click 1", "click 1 2 3", "click a 2", "key", "key shift", "key enterr", "scroll", "scroll 1.5", "key ab"] {
            assert!(matches!(parse_action(bad, &cfg()), Err(Error::Grammar(_))), "{bad:?}");
        }
    }

    #[test]
    fn serializes_canonically() {
        assert_eq!(Action::click(14, 19).serialize(), "click 14 19");
        let k = Action::Key { modifier: Some(Modifier::Shift), keys: vec!["a".into()] };
        assert_eq!(k.serialize(), "key shift a");
        assert_eq!(Action::Scroll { z: -2 }.serialize(), "scroll -2");
        assert_eq!(Action::BeginDrag { x: 3, y: 4 }.serialize(), "begin_drag 3 4");
        assert_eq!(Action::key("enter").serialize(), "key enter");
    }

    #[test]
    fn narrow_fractional_bins_can_miss_their_centre() {
        assert_eq!(bin_to_px(1, 5, 4).unwrap(), 1);
        assert_eq!(px_to_bin(1, 5, 4).unwrap(), 0);
    }

    #[test]
    fn canonicalizes_whitespace() {
        let a = parse_action("  key   ctrl  c  v ", &cfg()).unwrap();
        assert_eq!(a.serialize(), "key ctrl c v");
    }

    #[test]
    fn binning_examples() {
        assert_eq!(px_to_bin(80, 160, 32).unwrap(), 16);
        assert_eq!(px_to_bin(0, 160, 32).unwrap(), 0);
        assert_eq!(px_to_bin(159, 160, 32).unwrap(), 31);
        assert!(px_to_bin(160, 160, 32).is_err());
        assert_eq!(bin_to_px(16, 160, 32).unwrap(), 82);
        assert_eq!(bin_to_px(0, 160, 32).unwrap(), 2);
        assert_eq!(bin_to_px(0, 32, 32).unwrap(), 0);
        assert!(bin_to_px(32, 160, 32).is_err());
    }

    #[test]
    fn binning_idempotent_exhaustive() {
        // Holds whenever bins are at least 2 px wide or tile the axis exactly.
        for len in 1..=256u32 {
            for n in (1..=len.min(64)).filter(|&n| len >= 2 * n || len % n == 0) {
                for b in 0..n {
                    let px = bin_to_px(b, len, n).unwrap();
                    assert_eq!(px_to_bin(px, len, n).unwrap(), b, "len {len} n {n} b {b}");
                }
            }
        }
    }
}

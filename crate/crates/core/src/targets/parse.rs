//! Recursive-descent parser for the target grammar:
//!
//! ```text
//! mixture := term { "+" term } ;
//! term    := [ weight "*" ] dist ;
//! dist    := "N(" num "," num ")" | "U(" num "," num ")" | "Beta(" num "," num ")" ;
//! ```
//!
//! Whitespace is insignificant. An unweighted term has weight 1.

use super::{Component, Target};
use crate::error::{Error, Result};

pub fn parse_target(text: &str) -> Result<Target> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let mut components = Vec::new();
    let mut weights = Vec::new();
    loop {
        let (w, c) = p.term()?;
        components.push(c);
        weights.push(w);
        p.skip_ws();
        match p.peek() {
            Some(b'+') => p.pos += 1,
            None => break,
            Some(_) => return Err(p.error("expected `+` or end of input")),
        }
    }
    Target::new(components, weights)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::Syntax {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|c| c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected `{}`", c as char)))
        }
    }

    fn term(&mut self) -> Result<(f64, Component)> {
        self.skip_ws();
        let weight = if self.peek().is_some_and(|c| c.is_ascii_digit() || c == b'.') {
            let at = self.pos;
            let w = self.number()?;
            if !(w > 0.0 && w <= 1.0) {
                return Err(Error::Syntax {
                    pos: at,
                    msg: format!("weight {w} not in (0, 1]"),
                });
            }
            self.expect(b'*')?;
            w
        } else {
            1.0
        };
        Ok((weight, self.dist()?))
    }

    fn dist(&mut self) -> Result<Component> {
        self.skip_ws();
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_alphabetic()) {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        if name.is_empty() {
            return Err(self.error("expected a distribution (N, U or Beta)"));
        }
        self.expect(b'(')?;
        let first = self.number()?;
        self.expect(b',')?;
        let second = self.number()?;
        self.expect(b')')?;
        let c = match name {
            "N" => Component::Normal {
                mu: first,
                sd: second,
            },
            "U" => Component::Uniform {
                a: first,
                b: second,
            },
            "Beta" => Component::Beta {
                alpha: first,
                beta: second,
            },
            other => {
                return Err(Error::Syntax {
                    pos: start,
                    msg: format!("unknown distribution `{other}`"),
                })
            }
        };
        c.validate()?;
        Ok(c)
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        if matches!(self.peek(), Some(b'+' | b'-')) {
            self.pos += 1;
        }
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.peek().is_some_and(|c| c.is_ascii_digit()) {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut n = digits(self);
        if self.peek() == Some(b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            self.pos = start;
            return Err(self.error("expected a number"));
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        text.parse::<f64>().map_err(|_| Error::Syntax {
            pos: start,
            msg: format!("invalid number `{text}`"),
        })
    }
}

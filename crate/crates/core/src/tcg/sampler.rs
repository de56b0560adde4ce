//! Built-in constraint-driven random input sampler.
//!
//! A sampler spec is a list of output lines separated by `;` or newlines.
//! Each line is a whitespace-separated list of items:
//!
//! ```text
//! [name:]int(lo,hi)[*count]     uniform integer in [lo, hi], optionally repeated
//! [name:]<integer literal>
//! ```
//!
//! Bounds and counts are integer literals or names bound earlier. For
//! example, `n:int(1,8); int(-10,10)*n` prints a length and then that many
//! values on the next line.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::hashing::derive_seed;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("sampler spec: {0}")]
pub struct SamplerError(pub String);

#[derive(Debug, Clone, PartialEq, Eq)]
enum Value {
    Lit(i64),
    Var(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Gen {
    Int(Value, Value),
    Const(i64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Item {
    name: Option<String>,
    gen: Gen,
    repeat: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplerSpec {
    lines: Vec<Vec<Item>>,
}

fn parse_value(s: &str) -> Result<Value, SamplerError> {
    let s = s.trim();
    if let Ok(v) = s.parse::<i64>() {
        Ok(Value::Lit(v))
    } else if !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        Ok(Value::Var(s.to_string()))
    } else {
        Err(SamplerError(format!("bad value `{s}`")))
    }
}

fn parse_item(tok: &str) -> Result<Item, SamplerError> {
    let (name, rest) = match tok.split_once(':') {
        Some((n, r)) => (Some(n.to_string()), r),
        None => (None, tok),
    };
    let (gen_text, repeat) = match rest.rsplit_once('*') {
        Some((g, r)) => (g, Some(parse_value(r)?)),
        None => (rest, None),
    };
    let gen = if let Some(args) = gen_text.strip_prefix("int(").and_then(|a| a.strip_suffix(')')) {
        let (lo, hi) = args
            .split_once(',')
            .ok_or_else(|| SamplerError(format!("int needs two bounds in `{tok}`")))?;
        Gen::Int(parse_value(lo)?, parse_value(hi)?)
    } else {
        Gen::Const(
            gen_text
                .parse()
                .map_err(|_| SamplerError(format!("unknown item `{tok}`")))?,
        )
    };
    if name.is_some() && repeat.is_some() {
        return Err(SamplerError(format!("repeated item cannot be named: `{tok}`")));
    }
    Ok(Item { name, gen, repeat })
}

impl SamplerSpec {
    pub fn parse(spec: &str) -> Result<SamplerSpec, SamplerError> {
        let mut lines = Vec::new();
        for raw in spec.split([';', '\n']) {
            let raw = raw.trim();
            if raw.is_empty() {
                continue;
            }
            // `int(1, 100)` may contain spaces inside the parentheses.
            let mut tokens = Vec::new();
            let mut current = String::new();
            let mut depth = 0;
            for c in raw.chars() {
                match c {
                    '(' => depth += 1,
                    ')' => depth -= 1,
                    _ => {}
                }
                if c.is_whitespace() && depth == 0 {
                    if !current.is_empty() {
                        tokens.push(std::mem::take(&mut current));
                    }
                } else if !c.is_whitespace() {
                    current.push(c);
                }
            }
            if !current.is_empty() {
                tokens.push(current);
            }
            lines.push(tokens.iter().map(|t| parse_item(t)).collect::<Result<Vec<_>, _>>()?);
        }
        if lines.is_empty() {
            return Err(SamplerError("empty spec".into()));
        }
        let spec = SamplerSpec { lines };
        spec.check_names()?;
        Ok(spec)
    }

    fn check_names(&self) -> Result<(), SamplerError> {
        let mut bound = std::collections::HashSet::new();
        let need = |v: &Value, bound: &std::collections::HashSet<String>| match v {
            Value::Var(n) if !bound.contains(n) => Err(SamplerError(format!("`{n}` used before it is bound"))),
            _ => Ok(()),
        };
        for item in self.lines.iter().flatten() {
            if let Gen::Int(lo, hi) = &item.gen {
                need(lo, &bound)?;
                need(hi, &bound)?;
            }
            if let Some(r) = &item.repeat {
                need(r, &bound)?;
            }
            if let Some(n) = &item.name {
                bound.insert(n.clone());
            }
        }
        Ok(())
    }

    /// One input drawn with `rng`.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Result<Vec<u8>, SamplerError> {
        let mut env: HashMap<&str, i64> = HashMap::new();
        let mut out = String::new();
        for line in &self.lines {
            let mut fields = Vec::new();
            for item in line {
                let resolve = |v: &Value, env: &HashMap<&str, i64>| match v {
                    Value::Lit(x) => *x,
                    Value::Var(n) => env[n.as_str()],
                };
                let times = match &item.repeat {
                    Some(r) => {
                        let t = resolve(r, &env);
                        usize::try_from(t).map_err(|_| SamplerError(format!("negative repeat count {t}")))?
                    }
                    None => 1,
                };
                for _ in 0..times {
                    let v = match &item.gen {
                        Gen::Const(c) => *c,
                        Gen::Int(lo, hi) => {
                            let (lo, hi) = (resolve(lo, &env), resolve(hi, &env));
                            if lo > hi {
                                return Err(SamplerError(format!("empty range [{lo}, {hi}]")));
                            }
                            rng.random_range(lo..=hi)
                        }
                    };
                    if let Some(n) = &item.name {
                        env.insert(n.as_str(), v);
                    }
                    fields.push(v.to_string());
                }
            }
            out.push_str(&fields.join(" "));
            out.push('\n');
        }
        Ok(out.into_bytes())
    }

    /// `count` inputs; input `i` uses its own stream derived from `seed`.
    pub fn generate(&self, count: usize, seed: u64) -> Result<Vec<Vec<u8>>, SamplerError> {
        (0..count)
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "sampler", i as u64));
                self.sample(&mut rng)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_ints_in_range() {
        let spec = SamplerSpec::parse("a:int(1,100) b:int(1, 100)").unwrap();
        let inputs = spec.generate(20, 7).unwrap();
        assert_eq!(inputs.len(), 20);
        for input in &inputs {
            let text = std::str::from_utf8(input).unwrap();
            let nums: Vec<i64> = text.trim_end_matches('\n').split(' ').map(|t| t.parse().unwrap()).collect();
            assert_eq!(nums.len(), 2);
            assert!(nums.iter().all(|v| (1..=100).contains(v)));
            assert!(text.ends_with('\n') && !text.trim_end_matches('\n').contains('\n'));
        }
        assert_eq!(inputs, spec.generate(20, 7).unwrap());
        assert!(spec.generate(0, 7).unwrap().is_empty());
    }

    #[test]
    fn dependent_lengths() {
        let spec = SamplerSpec::parse("n:int(1,8); int(-10,10)*n").unwrap();
        for input in spec.generate(30, 1).unwrap() {
            let text = String::from_utf8(input).unwrap();
            let mut lines = text.lines();
            let n: usize = lines.next().unwrap().parse().unwrap();
            assert_eq!(lines.next().unwrap().split(' ').count(), n);
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(SamplerSpec::parse("").is_err());
        assert!(SamplerSpec::parse("int(1,n)").is_err());
        assert!(SamplerSpec::parse("float(1,2)").is_err());
        assert!(SamplerSpec::parse("x:int(1,2)*3").is_err());
        let empty_range = SamplerSpec::parse("int(5,1)").unwrap();
        assert!(empty_range.generate(1, 0).is_err());
    }
}

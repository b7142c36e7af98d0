use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

/// An observation value `N / M` kept as a reduced fraction, so `1/2` and
/// `2/4` are the same symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Symbol {
    num: u32,
    den: u32,
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Symbol {
    /// Panics if `den == 0` or `num > den`.
    pub fn new(num: u32, den: u32) -> Self {
        assert!(den > 0 && num <= den, "invalid observation {num}/{den}");
        let g = gcd(num, den);
        Symbol {
            num: num / g,
            den: den / g,
        }
    }

    pub fn num(self) -> u32 {
        self.num
    }

    pub fn den(self) -> u32 {
        self.den
    }

    pub fn value(self) -> f64 {
        f64::from(self.num) / f64::from(self.den)
    }
}

impl Ord for Symbol {
    fn cmp(&self, other: &Self) -> Ordering {
        (u64::from(self.num) * u64::from(other.den)).cmp(&(u64::from(other.num) * u64::from(self.den)))
    }
}

impl PartialOrd for Symbol {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Symbol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (n, d) = s.split_once('/').ok_or_else(|| format!("expected num/den, got {s:?}"))?;
        let n: u32 = n.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
        let d: u32 = d.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
        if d == 0 || n > d {
            return Err(format!("{s:?} is not an observation in [0, 1]"));
        }
        Ok(Symbol::new(n, d))
    }
}

/// Every value `k / m` with `1 <= m <= m_bar + 1`, `0 <= k <= m`, deduplicated
/// and sorted.
pub fn alphabet(m_bar: u32) -> Vec<Symbol> {
    let mut out: Vec<Symbol> = (1..=m_bar + 1)
        .flat_map(|m| (0..=m).map(move |k| Symbol::new(k, m)))
        .collect();
    out.sort();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_and_equality() {
        assert_eq!(Symbol::new(2, 4), Symbol::new(1, 2));
        assert_eq!(Symbol::new(0, 3), Symbol::new(0, 1));
        assert_eq!(Symbol::new(3, 3), Symbol::new(1, 1));
        let s = Symbol::new(6, 9);
        assert_eq!((s.num(), s.den()), (2, 3));
    }

    #[test]
    fn ordering_is_by_value() {
        assert!(Symbol::new(1, 3) < Symbol::new(1, 2));
        assert!(Symbol::new(2, 3) > Symbol::new(1, 2));
        assert_eq!(Symbol::new(1, 2).cmp(&Symbol::new(2, 4)), Ordering::Equal);
    }

    #[test]
    fn parse_display() {
        let s: Symbol = "2/4".parse().unwrap();
        assert_eq!(s.to_string(), "1/2");
        assert!("3/2".parse::<Symbol>().is_err());
        assert!("1/0".parse::<Symbol>().is_err());
        assert!("x".parse::<Symbol>().is_err());
    }

    #[test]
    fn small_alphabets() {
        let a = alphabet(1);
        assert_eq!(a, vec![Symbol::new(0, 1), Symbol::new(1, 2), Symbol::new(1, 1)]);
        let a: Vec<String> = alphabet(2).iter().map(ToString::to_string).collect();
        assert_eq!(a, ["0/1", "1/3", "1/2", "2/3", "1/1"]);
        assert_eq!(alphabet(0).len(), 2);
    }
}

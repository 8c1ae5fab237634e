use crate::error::{BridgeError, ErrorKind, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TruthMode {
    None,
    #[default]
    Plain,
    DelayLists,
}

/// Options of a comprehension query.
///
/// Packed into one integer: bits 0-1 hold the truth mode (0 none, 1 plain,
/// 2 delay lists), bit 2 selects set comprehension and the remaining bits
/// hold `vars`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QueryFlags {
    pub vars: u32,
    pub set: bool,
    pub truth: TruthMode,
}

impl Default for QueryFlags {
    fn default() -> Self {
        QueryFlags {
            vars: 1,
            set: false,
            truth: TruthMode::Plain,
        }
    }
}

impl QueryFlags {
    pub fn vars(vars: u32) -> QueryFlags {
        QueryFlags {
            vars,
            ..QueryFlags::default()
        }
    }

    pub fn with_set(mut self, set: bool) -> QueryFlags {
        self.set = set;
        self
    }

    pub fn with_truth(mut self, truth: TruthMode) -> QueryFlags {
        self.truth = truth;
        self
    }

    pub fn encode(self) -> i64 {
        let truth = match self.truth {
            TruthMode::None => 0,
            TruthMode::Plain => 1,
            TruthMode::DelayLists => 2,
        };
        truth | (self.set as i64) << 2 | (self.vars as i64) << 3
    }

    pub fn decode(code: i64) -> Result<QueryFlags> {
        let bad = || BridgeError::logic(ErrorKind::FlagError, format!("undecodable query flags {code}"));
        if code < 0 {
            return Err(bad());
        }
        let truth = match code & 3 {
            0 => TruthMode::None,
            1 => TruthMode::Plain,
            2 => TruthMode::DelayLists,
            _ => return Err(bad()),
        };
        let vars = u32::try_from(code >> 3).map_err(|_| bad())?;
        Ok(QueryFlags {
            vars,
            set: code & 4 != 0,
            truth,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mode() -> impl Strategy<Value = TruthMode> {
        prop_oneof![
            Just(TruthMode::None),
            Just(TruthMode::Plain),
            Just(TruthMode::DelayLists)
        ]
    }

    proptest! {
        #[test]
        fn decode_inverts_encode(vars in 0u32..100_000, set: bool, truth in mode()) {
            let f = QueryFlags { vars, set, truth };
            prop_assert_eq!(QueryFlags::decode(f.encode()).unwrap(), f);
        }
    }

    #[test]
    fn rejects_undecodable() {
        assert_eq!(QueryFlags::decode(3).unwrap_err().kind, ErrorKind::FlagError);
        assert_eq!(QueryFlags::decode(-1).unwrap_err().kind, ErrorKind::FlagError);
        assert_eq!(QueryFlags::decode(1 << 40).unwrap_err().kind, ErrorKind::FlagError);
        assert_eq!(QueryFlags::vars(2).encode(), 17);
    }
}

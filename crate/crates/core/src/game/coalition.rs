use std::fmt;

use smallvec::SmallVec;

/// A set of players, stored as a little-endian bitset.
///
/// Games with at most 64 players use a single inline word, so the value is
/// a plain bitmask and cheap to hash.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coalition {
    players: usize,
    words: SmallVec<[u64; 1]>,
}

impl Coalition {
    pub fn empty(players: usize) -> Self {
        let len = players.div_ceil(64).max(1);
        Self {
            players,
            words: SmallVec::from_elem(0, len),
        }
    }

    pub fn grand(players: usize) -> Self {
        let mut c = Self::empty(players);
        for p in 0..players {
            c.insert(p);
        }
        c
    }

    /// Builds a coalition from a bitmask; bits at or above `players` are ignored.
    pub fn from_mask(players: usize, mask: u64) -> Self {
        let mut c = Self::empty(players);
        let keep = if players >= 64 {
            u64::MAX
        } else {
            (1u64 << players) - 1
        };
        c.words[0] = mask & keep;
        c
    }

    /// # Panics
    /// If a member is out of range.
    pub fn from_members(players: usize, members: impl IntoIterator<Item = usize>) -> Self {
        let mut c = Self::empty(players);
        for m in members {
            c.insert(m);
        }
        c
    }

    pub fn player_count(&self) -> usize {
        self.players
    }

    pub fn insert(&mut self, player: usize) {
        assert!(
            player < self.players,
            "player {player} out of range for {} players",
            self.players
        );
        self.words[player / 64] |= 1 << (player % 64);
    }

    pub fn with(&self, player: usize) -> Self {
        let mut c = self.clone();
        c.insert(player);
        c
    }

    pub fn contains(&self, player: usize) -> bool {
        player < self.players && self.words[player / 64] & (1 << (player % 64)) != 0
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Members in increasing order.
    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &word)| {
            let mut w = word;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let bit = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + bit)
            })
        })
    }

    /// The bitmask, when the game has at most 64 players.
    pub fn to_mask(&self) -> Option<u64> {
        (self.words.len() == 1).then(|| self.words[0])
    }
}

impl fmt::Debug for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.members()).finish()
    }
}

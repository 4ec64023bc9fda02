//! Longest common substring between a candidate source and a corpus,
//! ignoring whitespace.
//!
//! A suffix automaton is built over the (whitespace-stripped) candidate and
//! each corpus entry is streamed through it, so the cost is
//! O(|candidate| + sum of corpus lengths) with small constants. Corpora in
//! the megabyte range are handled well within the second.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{strip_whitespace, CorpusError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LcsMatch {
    /// Length of the longest common substring in bytes (whitespace removed).
    pub length: usize,
    /// The matched substring itself, in whitespace-stripped form.
    pub matched: String,
    /// Index of the corpus entry that produced the match.
    pub corpus_index: usize,
}

const UNSET: u32 = u32::MAX;
/// Candidates up to this size get dense transition tables (fast streaming at
/// 256 * 4 bytes per state); larger ones fall back to hash maps.
const DENSE_LIMIT: usize = 256 * 1024;

enum Transitions {
    Dense(Vec<[u32; 256]>),
    Sparse(Vec<HashMap<u8, u32>>),
}

impl Transitions {
    fn with_one_state(dense: bool) -> Self {
        if dense {
            Transitions::Dense(vec![[UNSET; 256]])
        } else {
            Transitions::Sparse(vec![HashMap::new()])
        }
    }

    fn push_state(&mut self) {
        match self {
            Transitions::Dense(v) => v.push([UNSET; 256]),
            Transitions::Sparse(v) => v.push(HashMap::new()),
        }
    }

    fn clone_state(&mut self, from: usize) {
        match self {
            Transitions::Dense(v) => {
                let copy = v[from];
                v.push(copy);
            }
            Transitions::Sparse(v) => {
                let copy = v[from].clone();
                v.push(copy);
            }
        }
    }

    #[inline]
    fn get(&self, state: usize, b: u8) -> u32 {
        match self {
            Transitions::Dense(v) => v[state][b as usize],
            Transitions::Sparse(v) => v[state].get(&b).copied().unwrap_or(UNSET),
        }
    }

    fn set(&mut self, state: usize, b: u8, to: u32) {
        match self {
            Transitions::Dense(v) => v[state][b as usize] = to,
            Transitions::Sparse(v) => {
                v[state].insert(b, to);
            }
        }
    }
}

/// Suffix automaton over one byte string.
struct SuffixAutomaton {
    len: Vec<usize>,
    link: Vec<u32>,
    next: Transitions,
    last: usize,
}

impl SuffixAutomaton {
    fn build(text: &[u8]) -> Self {
        let mut sa = SuffixAutomaton {
            len: vec![0],
            link: vec![UNSET],
            next: Transitions::with_one_state(text.len() <= DENSE_LIMIT),
            last: 0,
        };
        for &b in text {
            sa.extend(b);
        }
        sa
    }

    fn extend(&mut self, b: u8) {
        let cur = self.len.len();
        self.len.push(self.len[self.last] + 1);
        self.link.push(UNSET);
        self.next.push_state();
        let mut p = self.last as u32;
        while p != UNSET && self.next.get(p as usize, b) == UNSET {
            self.next.set(p as usize, b, cur as u32);
            p = self.link[p as usize];
        }
        if p == UNSET {
            self.link[cur] = 0;
        } else {
            let q = self.next.get(p as usize, b) as usize;
            if self.len[p as usize] + 1 == self.len[q] {
                self.link[cur] = q as u32;
            } else {
                let clone = self.len.len();
                self.len.push(self.len[p as usize] + 1);
                self.link.push(self.link[q]);
                self.next.clone_state(q);
                let mut w = p;
                while w != UNSET && self.next.get(w as usize, b) == q as u32 {
                    self.next.set(w as usize, b, clone as u32);
                    w = self.link[w as usize];
                }
                self.link[q] = clone as u32;
                self.link[cur] = clone as u32;
            }
        }
        self.last = cur;
    }

    /// Longest substring of `entry` that also occurs in the automaton's text,
    /// returned as (length, end position of the first maximal occurrence).
    fn longest_match(&self, entry: &[u8]) -> (usize, usize) {
        let mut best = (0usize, 0usize);
        let mut state = 0usize;
        let mut len = 0usize;
        for (pos, &b) in entry.iter().enumerate() {
            while state != 0 && self.next.get(state, b) == UNSET {
                state = self.link[state] as usize;
                len = self.len[state];
            }
            let nxt = self.next.get(state, b);
            if nxt != UNSET {
                state = nxt as usize;
                len += 1;
            } else {
                len = 0;
            }
            if len > best.0 {
                best = (len, pos + 1);
            }
        }
        best
    }
}

/// Find the longest common contiguous substring between `candidate` and any
/// corpus entry, ignoring whitespace on both sides. Ties go to the lowest
/// corpus index, then to the earliest occurrence within that entry.
pub fn lcs_against_corpus(candidate: &str, corpus: &[String]) -> Result<LcsMatch, CorpusError> {
    if corpus.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let cand = strip_whitespace(candidate);
    let sa = SuffixAutomaton::build(cand.as_bytes());

    let mut best = LcsMatch {
        length: 0,
        matched: String::new(),
        corpus_index: 0,
    };
    for (idx, entry) in corpus.iter().enumerate() {
        let stripped = strip_whitespace(entry);
        let (len, end) = sa.longest_match(stripped.as_bytes());
        if len > best.length {
            best = LcsMatch {
                length: len,
                matched: stripped[end - len..end].to_string(),
                corpus_index: idx,
            };
        }
    }
    Ok(best)
}
